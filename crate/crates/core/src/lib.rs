pub mod channel_models;

pub mod fitting;
pub mod measurement;
pub mod ofdm;
mod pulse;
pub mod sim;
