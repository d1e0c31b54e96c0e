//! One-dimensional data lines `D(z) = a + b z` through the observed data.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Line through data space along which the selection event is searched.
#[derive(Debug, Clone, PartialEq)]
pub struct LineParam {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub z_obs: f64,
}

impl LineParam {
    /// Line for a linear contrast `eta^T D`: `b = eta / |eta|^2`,
    /// `z_obs = eta^T D`, `a = D - b z_obs` (so `eta^T a = 0`).
    pub fn for_contrast(eta: &DVector<f64>, data: &DVector<f64>) -> Result<Self> {
        if eta.len() != data.len() {
            return Err(Error::InvalidArgument(format!(
                "contrast has length {} but data has length {}",
                eta.len(),
                data.len()
            )));
        }
        let norm2 = eta.norm_squared();
        if !(norm2 > 0.0) {
            return Err(Error::DegenerateStatistic("zero contrast vector".into()));
        }
        let b = eta / norm2;
        let z_obs = eta.dot(data);
        let a = data - &b * z_obs;
        Ok(Self { a, b, z_obs })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `a + b z`.
    pub fn at(&self, z: f64) -> DVector<f64> {
        &self.a + &self.b * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contrast_line_reproduces_data() {
        let eta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let d = DVector::from_vec(vec![0.3, 1.7, -4.0]);
        let line = LineParam::for_contrast(&eta, &d).unwrap();
        assert!((line.at(line.z_obs) - &d).norm() < 1e-12);
        assert!(eta.dot(&line.a).abs() < 1e-12);
        assert!((eta.dot(&line.b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_contrast_is_degenerate() {
        let z = DVector::zeros(3);
        assert!(matches!(
            LineParam::for_contrast(&z, &DVector::from_element(3, 1.0)),
            Err(Error::DegenerateStatistic(_))
        ));
        assert!(LineParam::for_contrast(&DVector::zeros(2), &z).is_err());
    }
}
