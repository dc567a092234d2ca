pub mod arch;
pub mod cli;
pub mod coi;
pub mod gallery;
pub mod groups;
pub mod orders;
pub mod schemes;
pub mod words;
