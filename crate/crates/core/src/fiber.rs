//! Bloch fiber bookkeeping: thresholds λ_{k,n} = (n+k)², open/closed channels
//! and the weights β_{k,n}(λ) = |λ − λ_{k,n}|^{1/4}.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberContext {
    pub k: f64,
    /// Channels |n| ≤ channel_cutoff are retained.
    pub channel_cutoff: usize,
}

/// A point of τ_k with the channels that open there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    pub lambda: f64,
    pub channels: Vec<i64>,
}

/// Partition of the retained channels at a real energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSplit {
    pub lambda: f64,
    /// Z_k(λ): channels with λ_{k,n} ≤ λ, sorted by n.
    pub open: Vec<i64>,
    pub closed: Vec<i64>,
}

impl FiberContext {
    pub fn new(k: f64, channel_cutoff: usize) -> Result<Self> {
        if !(k.is_finite() && (-0.5..=0.5).contains(&k)) {
            return Err(Error::InvalidInput(format!("Bloch parameter k = {k} must lie in [−1/2, 1/2]")));
        }
        if channel_cutoff == 0 {
            return Err(Error::InvalidInput("channel cutoff must be positive".into()));
        }
        Ok(Self { k, channel_cutoff })
    }

    pub fn threshold(&self, n: i64) -> f64 {
        let x = n as f64 + self.k;
        x * x
    }

    pub fn channels(&self) -> impl Iterator<Item = i64> {
        let n = self.channel_cutoff as i64;
        -n..=n
    }

    pub fn beta(&self, n: i64, lambda: f64) -> f64 {
        (lambda - self.threshold(n)).abs().sqrt().sqrt()
    }

    /// Smallest threshold just outside the retained channel range.
    pub fn first_dropped_threshold(&self) -> f64 {
        let n = self.channel_cutoff as i64 + 1;
        self.threshold(n).min(self.threshold(-n))
    }

    /// τ_k ∩ (−∞, upto], sorted, with coinciding channels grouped.
    pub fn thresholds_upto(&self, upto: f64) -> Vec<Threshold> {
        let mut list: Vec<(f64, i64)> =
            self.channels().map(|n| (self.threshold(n), n)).filter(|(l, _)| *l <= upto).collect();
        list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out: Vec<Threshold> = Vec::new();
        for (l, n) in list {
            match out.last_mut() {
                Some(t) if (t.lambda - l).abs() <= 1e-14 * l.max(1.0) => t.channels.push(n),
                _ => out.push(Threshold { lambda: l, channels: vec![n] }),
            }
        }
        out
    }

    /// Channels whose threshold equals λ (to relative 1e-12).
    pub fn channels_at(&self, lambda: f64) -> Vec<i64> {
        self.channels().filter(|&n| (self.threshold(n) - lambda).abs() <= 1e-12 * lambda.abs().max(1.0)).collect()
    }

    /// Distance from λ to τ_k and the nearest threshold.
    pub fn nearest_threshold(&self, lambda: f64) -> (f64, f64) {
        self.channels()
            .map(|n| {
                let t = self.threshold(n);
                ((lambda - t).abs(), t)
            })
            .fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a })
    }

    pub fn split(&self, lambda: f64) -> ChannelSplit {
        let (open, closed) = self.channels().partition(|&n| self.threshold(n) <= lambda);
        ChannelSplit { lambda, open, closed }
    }
}
