/// Exponentially decayed mean and variance of a return stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingMoments {
    pub mean: f64,
    pub variance: f64,
    pub decay: f64,
}

impl MovingMoments {
    pub fn new(decay: f64) -> Self {
        Self {
            mean: 0.0,
            variance: 0.0,
            decay,
        }
    }

    /// The mean moves first; the variance uses the updated mean.
    pub fn update(&mut self, r: f64) {
        let tau = self.decay;
        self.mean = tau * self.mean + (1.0 - tau) * r;
        let dev = r - self.mean;
        self.variance = (tau * self.variance + (1.0 - tau) * dev * dev).max(0.0);
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}
