//! Time constants, diffusivities and the scale ratios they induce.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub tau_u: f64,
    pub tau_w: f64,
    pub tau_z: f64,
    pub d_u: f64,
    pub d_w: f64,
    pub d_z: f64,
}

impl ScaleParams {
    pub fn eps_s(&self) -> f64 {
        self.tau_u / self.tau_w
    }

    pub fn eps_us(&self) -> f64 {
        self.tau_u / self.tau_z
    }

    /// Fine-to-medium length ratio, infinite without medium diffusion.
    pub fn delta_l(&self) -> f64 {
        if self.d_w == 0.0 {
            f64::INFINITY
        } else {
            (self.d_u / self.d_w).sqrt()
        }
    }

    /// Fine-to-gross length ratio, infinite without ultraslow diffusion.
    pub fn delta_ul(&self) -> f64 {
        if self.d_z == 0.0 {
            f64::INFINITY
        } else {
            (self.d_u / self.d_z).sqrt()
        }
    }

    /// Positivity plus the ordering of time and length scale ratios.
    pub fn is_valid(&self) -> bool {
        let positive = self.tau_u > 0.0 && self.tau_w > 0.0 && self.tau_z > 0.0 && self.d_u > 0.0;
        let nonneg = self.d_w >= 0.0 && self.d_z >= 0.0;
        let lengths = !self.delta_ul().is_finite() || self.delta_ul() <= self.delta_l();
        positive && nonneg && self.eps_us() <= self.eps_s() && lengths
    }
}
