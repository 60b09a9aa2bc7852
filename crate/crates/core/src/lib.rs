//! Energy-saving testbed for an O-RAN style network: a digital-twin RAN
//! simulator, a RIC-style KPM/action service, two energy-saving xApps and an
//! exhaustive optimum for small instances.

pub mod mobility;
pub mod power;
pub mod radio;
pub mod scenario;
pub mod sim;
pub mod wire;
pub mod service;
pub mod xapp;
pub mod baseline;
pub mod oracle;
pub mod campaign;
