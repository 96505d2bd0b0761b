use super::ModelError;
use crate::geometry::InsulatedBoundary;

/// Piecewise linear insulation thickness on the insulated boundary.
///
/// `d` is measured along the transversal field `k`, `d_tilde = (k . n) d`
/// along the normal. Both are stored per boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionProfile {
    d: Vec<f64>,
    d_tilde: Vec<f64>,
}

fn check(values: &[f64], boundary: &InsulatedBoundary) -> Result<(), ModelError> {
    if values.len() != boundary.node_count() {
        return Err(ModelError::LengthMismatch {
            expected: boundary.node_count(),
            got: values.len(),
        });
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(ModelError::NegativeWeight { index, value });
    }
    Ok(())
}

impl DistributionProfile {
    pub fn from_d(boundary: &InsulatedBoundary, d: Vec<f64>) -> Result<Self, ModelError> {
        check(&d, boundary)?;
        let d_tilde = d.iter().enumerate().map(|(i, v)| boundary.k_dot_n(i) * v).collect();
        Ok(DistributionProfile { d, d_tilde })
    }

    pub fn from_d_tilde(boundary: &InsulatedBoundary, d_tilde: Vec<f64>) -> Result<Self, ModelError> {
        check(&d_tilde, boundary)?;
        let d = d_tilde.iter().enumerate().map(|(i, v)| v / boundary.k_dot_n(i)).collect();
        Ok(DistributionProfile { d, d_tilde })
    }

    /// `d_tilde = m / |Gamma_I|`, the default starting point of the optimizer.
    pub fn uniform_mass(boundary: &InsulatedBoundary, m: f64) -> Result<Self, ModelError> {
        let value = m / boundary.total_length();
        Self::from_d_tilde(boundary, vec![value; boundary.node_count()])
    }

    pub fn constant_d(boundary: &InsulatedBoundary, d: f64) -> Result<Self, ModelError> {
        Self::from_d(boundary, vec![d; boundary.node_count()])
    }

    /// Samples `d` (in the k direction) from a function of position.
    pub fn from_fn(boundary: &InsulatedBoundary, f: impl Fn(f64, f64) -> f64) -> Result<Self, ModelError> {
        let d = boundary.points().iter().map(|p| f(p.x, p.y)).collect();
        Self::from_d(boundary, d)
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn d_tilde(&self) -> &[f64] {
        &self.d_tilde
    }

    /// `||d_tilde||_{1, Gamma_I}`.
    pub fn mass(&self, boundary: &InsulatedBoundary) -> f64 {
        boundary.integrate(&self.d_tilde)
    }

    pub fn d_max(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    pub fn d_min(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rescales so that the mass equals `m` exactly (up to rounding).
    pub fn renormalize(&mut self, boundary: &InsulatedBoundary, m: f64) {
        let mass = self.mass(boundary);
        if mass > 0.0 {
            let s = m / mass;
            self.d.iter_mut().for_each(|v| *v *= s);
            self.d_tilde.iter_mut().for_each(|v| *v *= s);
        }
    }
}
