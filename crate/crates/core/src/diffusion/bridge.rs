use std::collections::BTreeMap;

use ordered_float::OrderedFloat;

use crate::error::{invalid, Result};
use crate::source::UniformSource;

/// Brownian bridge from `(0, x)` to `(T, u)` revealed lazily at the times
/// where it is queried. Every revealed value is drawn exactly from the
/// Gaussian conditional law given its two revealed neighbours.
#[derive(Debug, Clone)]
pub struct BridgeSkeleton {
    points: BTreeMap<OrderedFloat<f64>, f64>,
    horizon: f64,
}

impl BridgeSkeleton {
    pub fn new(start: f64, horizon: f64, end: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!(
                "bridge horizon {horizon} must be positive"
            )));
        }
        let mut points = BTreeMap::new();
        points.insert(OrderedFloat(0.0), start);
        points.insert(OrderedFloat(horizon), end);
        Ok(Self { points, horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of revealed points, endpoints included.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, t: f64) -> Option<f64> {
        self.points.get(&OrderedFloat(t)).copied()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().map(|(t, w)| (t.0, *w))
    }

    /// Revealed neighbours `(t_l, w_l), (t_r, w_r)` with `t_l < t < t_r`.
    pub fn neighbours(&self, t: f64) -> Option<((f64, f64), (f64, f64))> {
        let key = OrderedFloat(t);
        let (tl, wl) = self.points.range(..key).next_back()?;
        let (tr, wr) = self.points.range(key..).find(|(s, _)| **s > key)?;
        Some(((tl.0, *wl), (tr.0, *wr)))
    }

    /// Value of the path at `t`, drawn if not yet revealed.
    ///
    /// Conditional on neighbours `t_l < t < t_r` the value is Gaussian with
    /// mean `w_l + (t - t_l)/(t_r - t_l) (w_r - w_l)` and variance
    /// `(t - t_l)(t_r - t)/(t_r - t_l)`.
    pub fn reveal(&mut self, t: f64, src: &mut UniformSource) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(invalid(format!("time {t} outside [0, {}]", self.horizon)));
        }
        if let Some(w) = self.get(t) {
            return Ok(w);
        }
        let ((tl, wl), (tr, wr)) = self
            .neighbours(t)
            .expect("endpoints bracket every interior time");
        let span = tr - tl;
        let mean = wl + (t - tl) / span * (wr - wl);
        let var = (t - tl) * (tr - t) / span;
        let w = mean + var.sqrt() * src.next_normal();
        self.points.insert(OrderedFloat(t), w);
        Ok(w)
    }
}
