//! Std companion to `geoexif-core`: evidence scanning, the analysis store,
//! geo-service clients, the HTTP API, reports and test-corpus generation.

pub mod fixtures;
pub mod geoservice;
pub mod thumb;
pub mod asset;
pub mod store;
pub mod scan;
pub mod feed;
pub mod query;
pub mod report;
pub mod api;
pub mod server;
