use crate::controller::Reference;

/// Sinusoidal position reference `A sin(w t)` with analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineReference {
    pub amplitude: f64,
    pub omega: f64,
}

impl Default for SineReference {
    fn default() -> Self {
        Self {
            amplitude: 0.5,
            omega: 0.1,
        }
    }
}

impl SineReference {
    pub fn at(&self, t: f64) -> Reference {
        let (sin, cos) = (self.omega * t).sin_cos();
        let a = self.amplitude;
        let w = self.omega;
        Reference {
            xd: a * sin,
            dxd: a * w * cos,
            ddxd: -a * w * w * sin,
            dddxd: -a * w * w * w * cos,
        }
    }
}

/// Default scenario reference `0.5 sin(0.1 t)`.
pub fn reference_trajectory(t: f64) -> Reference {
    SineReference::default().at(t)
}
