//! One module per subcommand.

pub mod effpot;
pub mod oracle;
pub mod simulate;
pub mod spectrum;
pub mod verify;
