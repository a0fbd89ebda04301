// SPDX-License-Identifier: Apache-2.0

pub mod campaign;
pub mod clustering;
pub mod faultdb;
pub mod gatesim;
pub mod learn;
pub mod netlist;
pub mod pipeline;
pub mod scalar;

pub use scalar::Scalar;

pub type FaultDb64 = faultdb::FaultDb<f64>;
pub type FaultDb32 = faultdb::FaultDb<f32>;
pub type CampaignConfig64 = campaign::CampaignConfig<f64>;
pub type CampaignResult64 = campaign::CampaignResult<f64>;
pub type CampaignReport64 = campaign::CampaignReport<f64>;
pub type Dataset64 = learn::Dataset<f64>;
pub type Dataset32 = learn::Dataset<f32>;
pub type SvmModel64 = learn::SvmModel<f64>;
pub type SvmModel32 = learn::SvmModel<f32>;
pub type Metrics64 = learn::Metrics<f64>;
pub type FeatureVector64 = learn::FeatureVector<f64>;
