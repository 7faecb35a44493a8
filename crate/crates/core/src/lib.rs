//! Fuzzy link-cost routing (FLBRA) for indoor wireless sensor networks.
//!
//! Links are scored from their mean RSSI, RSSI standard deviation and packet
//! error rate by a Mamdani fuzzy system, routes to the sink are built with
//! Dijkstra over those scores, and the result is compared against greedy
//! RSSI-based forwarding (RBF) on seeded grid deployments.
//!
//! Module map:
//!
//! - [`fuzzy`]: membership functions, rule base, centroid defuzzification.
//! - [`link_model`]: log-distance path loss with shadowing, link drift.
//! - [`topology`]: grid scenarios, the link graph, Dijkstra routing tables.
//! - [`protocols`]: FLBRA setup/operation state machines and RBF.
//! - [`metrics`]: PEP, success rates, the F parameter, confidence intervals.
//! - [`sim`]: configuration, scenario suites and result files.

pub mod error;
pub mod fuzzy;
pub mod link_model;
pub mod metrics;
pub mod protocols;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
pub use fuzzy::{CrispCost, FuzzyConfig, FuzzyEngine};
pub use link_model::{LinkQuality, PropagationParams, RandomSource};
pub use protocols::{DeliveryOutcome, FlbraController, NetworkStatus, ProtocolConfig};
pub use sim::RunConfig;
pub use topology::{NetworkGraph, NodeId, RoutingTable, Scenario};
