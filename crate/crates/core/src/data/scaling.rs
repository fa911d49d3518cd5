use nalgebra::DMatrix;

/// Training extremes map to these values.
pub const SCALED_LOW: f64 = 0.05;
pub const SCALED_HIGH: f64 = 0.95;

/// Per-feature affine map of the observed training range onto
/// `[SCALED_LOW, SCALED_HIGH]`. Constant features map to `0.5`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingTransform {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl ScalingTransform {
    /// Fits on the rows of `features` (training split only).
    pub fn fit(features: &DMatrix<f64>) -> Self {
        let n = features.ncols();
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        for j in 0..n {
            for v in features.column(j).iter() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        ScalingTransform { min, max }
    }

    pub fn from_ranges(min: Vec<f64>, max: Vec<f64>) -> Self {
        assert_eq!(min.len(), max.len());
        ScalingTransform { min, max }
    }

    pub fn identity_like(n: usize) -> Self {
        // maps [0.05, 0.95] onto itself
        ScalingTransform {
            min: vec![SCALED_LOW; n],
            max: vec![SCALED_HIGH; n],
        }
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    pub fn observed_min(&self) -> &[f64] {
        &self.min
    }

    pub fn observed_max(&self) -> &[f64] {
        &self.max
    }

    pub fn is_constant(&self, j: usize) -> bool {
        !(self.max[j] > self.min[j])
    }

    pub fn constant_flags(&self) -> Vec<bool> {
        (0..self.n_features()).map(|j| self.is_constant(j)).collect()
    }

    /// Gain of the affine map for feature `j` (zero for constant features).
    pub fn gain(&self, j: usize) -> f64 {
        if self.is_constant(j) {
            0.0
        } else {
            (SCALED_HIGH - SCALED_LOW) / (self.max[j] - self.min[j])
        }
    }

    pub fn offset(&self, j: usize) -> f64 {
        if self.is_constant(j) {
            0.5
        } else {
            SCALED_LOW - self.gain(j) * self.min[j]
        }
    }

    /// Scales one value; the flag reports clamping into `[0, 1]`.
    pub fn scale_value(&self, j: usize, v: f64) -> (f64, bool) {
        if self.is_constant(j) {
            return (0.5, false);
        }
        let t = (v - self.min[j]) / (self.max[j] - self.min[j]);
        let s = SCALED_LOW * (1.0 - t) + SCALED_HIGH * t;
        if (0.0..=1.0).contains(&t) {
            (s.clamp(SCALED_LOW, SCALED_HIGH), false)
        } else if (0.0..=1.0).contains(&s) {
            (s, false)
        } else {
            (s.clamp(0.0, 1.0), true)
        }
    }

    /// Scales a point, returning the number of clamped components.
    pub fn apply_point(&self, x: &[f64]) -> (Vec<f64>, usize) {
        let mut clamped = 0;
        let out = x
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let (s, c) = self.scale_value(j, v);
                clamped += c as usize;
                s
            })
            .collect();
        (out, clamped)
    }

    /// Scales every row, returning the scaled matrix and the clamp count.
    pub fn apply(&self, features: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
        let mut clamped = 0;
        let out = DMatrix::from_fn(features.nrows(), features.ncols(), |i, j| {
            let (s, c) = self.scale_value(j, features[(i, j)]);
            clamped += c as usize;
            s
        });
        (out, clamped)
    }
}
