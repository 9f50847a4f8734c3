use crate::error::{Error, Result};
use crate::scan::PolarScan;

use super::VectorDescriptor;

/// Mean power per range bin.
#[derive(Clone, Debug, PartialEq)]
pub struct RingKeyDescriptor {
    pub(super) values: Vec<f64>,
}

impl RingKeyDescriptor {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::argument(
                "ring key values must be finite and non-negative",
            ));
        }
        Ok(Self { values })
    }
}

impl VectorDescriptor for RingKeyDescriptor {
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Averages the scan over azimuths, summing rows in ascending order.
pub fn encode_ring_key(scan: &PolarScan) -> RingKeyDescriptor {
    let power = scan.power();
    let mut values = vec![0.0; scan.range_bin_count()];
    for row in power.rows() {
        values
            .iter_mut()
            .zip(row.iter())
            .for_each(|(acc, v)| *acc += v);
    }
    let h = scan.azimuth_count() as f64;
    values.iter_mut().for_each(|v| *v /= h);
    RingKeyDescriptor { values }
}
