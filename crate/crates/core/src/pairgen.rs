//! Synthetic time-tagged detection events and coincidence analysis.
//!
//! Pairs are emitted as a Poisson process; the idler is delayed from its
//! signal by a draw from the normalized two-sided exponential
//! p(tau) ~ exp(G_s tau) for tau < 0 and exp(-G_i tau) for tau > 0.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`: stream 0
//! drives emission times, stream 1 drives delays. A uniform variate is the
//! top 53 bits of `next_u64` scaled by 2^-53, so output is identical across
//! platforms.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// R1 (1/G_s + 1/G_i) above which pairs start to overlap.
pub const PURITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Channel {
    #[serde(rename = "S")]
    Signal,
    #[serde(rename = "I")]
    Idler,
}

impl Channel {
    pub fn label(self) -> &'static str {
        match self {
            Channel::Signal => "S",
            Channel::Idler => "I",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    /// ordered by time
    pub records: Vec<Event>,
    pub duration: f64,
    pub seed: u64,
    pub config_hash: String,
    /// pairs with both photons inside [0, duration]
    pub pairs: u64,
    /// R1 (1/G_s + 1/G_i) exceeded the purity limit
    pub purity_warning: bool,
}

impl EventStream {
    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = hash.into();
        self
    }

    pub fn times(&self, channel: Channel) -> Vec<f64> {
        self.records
            .iter()
            .filter(|e| e.channel == channel)
            .map(|e| e.time)
            .collect()
    }
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Uniform(rng)
    }

    /// [0, 1)
    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exp(1) variate
    fn exponential(&mut self) -> f64 {
        -(1.0 - self.next()).ln()
    }
}

/// Probability that the idler arrives after its signal.
pub fn positive_delay_fraction(decay_s: f64, decay_i: f64) -> f64 {
    decay_s / (decay_s + decay_i)
}

/// CDF of the normalized two-sided exponential delay distribution.
pub fn delay_cdf(tau: f64, decay_s: f64, decay_i: f64) -> f64 {
    let p_pos = positive_delay_fraction(decay_s, decay_i);
    if tau < 0.0 {
        (1.0 - p_pos) * (decay_s * tau).exp()
    } else {
        1.0 - p_pos * (-decay_i * tau).exp()
    }
}

/// Generate a stream at pair rate `rate` (1/s) over [0, duration].
pub fn generate(rate: f64, decay_s: f64, decay_i: f64, duration: f64, seed: u64) -> Result<EventStream> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidDuration(duration));
    }
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("pair rate {rate} 1/s")));
    }
    if !(decay_s > 0.0 && decay_i > 0.0) {
        return Err(Error::ZeroDecay);
    }
    let mut stream = EventStream {
        records: Vec::new(),
        duration,
        seed,
        config_hash: String::new(),
        pairs: 0,
        purity_warning: rate * (1.0 / decay_s + 1.0 / decay_i) > PURITY_LIMIT,
    };
    if rate == 0.0 {
        return Ok(stream);
    }
    let mut emission = Uniform::new(seed, 0);
    let mut delays = Uniform::new(seed, 1);
    let p_pos = positive_delay_fraction(decay_s, decay_i);
    let mut t = 0.0;
    loop {
        t += emission.exponential() / rate;
        if t > duration {
            break;
        }
        let tau = if delays.next() < p_pos {
            delays.exponential() / decay_i
        } else {
            -delays.exponential() / decay_s
        };
        let ti = t + tau;
        if !(0.0..=duration).contains(&ti) {
            continue;
        }
        stream.records.push(Event {
            time: t,
            channel: Channel::Signal,
        });
        stream.records.push(Event {
            time: ti,
            channel: Channel::Idler,
        });
        stream.pairs += 1;
    }
    stream
        .records
        .sort_by(|a, b| a.time.total_cmp(&b.time).then(a.channel.cmp(&b.channel)));
    Ok(stream)
}

/// All idler-minus-signal delays with |delay| <= window (start-stop over
/// every pairing, so accidentals are included).
pub fn coincidence_delays(stream: &EventStream, window: f64) -> Result<Vec<f64>> {
    let signal = stream.times(Channel::Signal);
    let idler = stream.times(Channel::Idler);
    if signal.is_empty() || idler.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut out = Vec::new();
    let mut lo = 0usize;
    for &ts in &signal {
        while lo < idler.len() && idler[lo] < ts - window {
            lo += 1;
        }
        for &ti in &idler[lo..] {
            if ti > ts + window {
                break;
            }
            out.push(ti - ts);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    /// len = counts.len() + 1
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_pairs: u64,
}

impl CoincidenceHistogram {
    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

pub fn histogram(stream: &EventStream, window: f64, bin_width: f64) -> Result<CoincidenceHistogram> {
    if !(bin_width > 0.0) || !(window > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "histogram window {window} s, bin width {bin_width} s"
        )));
    }
    let bins = (2.0 * window / bin_width).round() as usize;
    if bins < 10 {
        return Err(Error::InvalidParameter(format!(
            "window {window} s holds fewer than 10 bins of {bin_width} s"
        )));
    }
    let delays = coincidence_delays(stream, window)?;
    let mut counts = vec![0u64; bins];
    for d in delays {
        let k = ((d + window) / bin_width).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    Ok(CoincidenceHistogram {
        bin_edges: (0..=bins).map(|k| -window + k as f64 * bin_width).collect(),
        counts,
        total_pairs: stream.pairs,
    })
}

/// Expected accidental coincidences per unit delay, n_s n_i / T: pairings
/// of photons from different pairs, flat in the delay.
pub fn accidental_density(stream: &EventStream) -> f64 {
    let ns = stream.records.iter().filter(|e| e.channel == Channel::Signal).count() as f64;
    let ni = stream.records.len() as f64 - ns;
    ns * ni / stream.duration
}

/// CDF of coincidence delays inside +-window: the two-sided exponential
/// restricted to the window, mixed with a flat accidental fraction.
pub fn coincidence_cdf(tau: f64, decay_s: f64, decay_i: f64, window: f64, accidental_fraction: f64) -> f64 {
    let lo = delay_cdf(-window, decay_s, decay_i);
    let hi = delay_cdf(window, decay_s, decay_i);
    let t = tau.clamp(-window, window);
    let true_part = (delay_cdf(t, decay_s, decay_i) - lo) / (hi - lo);
    let flat = (t + window) / (2.0 * window);
    (1.0 - accidental_fraction) * true_part + accidental_fraction * flat
}

/// Kolmogorov-Smirnov distance between sorted samples and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical KS distance at 1% significance for large samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub decay_s: f64,
    pub decay_i: f64,
    pub correlation_time: f64,
}

/// ln 2 (1/G_s + 1/G_i) from fitted rates.
pub fn correlation_time_estimate(decay_s: f64, decay_i: f64) -> f64 {
    std::f64::consts::LN_2 * (1.0 / decay_s + 1.0 / decay_i)
}

/// Weighted straight line through (x, ln(c - b)); the weight (c - b)^2 / c
/// is the inverse Poisson variance of the log. Returns the slope.
fn log_linear_slope(points: &[(f64, u64)], background: f64) -> Option<f64> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, c) in points {
        let excess = c as f64 - background;
        let w = excess * excess / c as f64;
        let y = excess.ln();
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if points.len() < 3 || det <= 0.0 {
        return None;
    }
    Some((sw * sxy - sx * sy) / det)
}

/// Fit exp(G_s tau) and exp(-G_i tau) to the two flanks of a histogram
/// after removing a flat `background` (counts per bin). Bins straddling
/// zero and bins with fewer than `min_count` counts above background are
/// skipped.
pub fn fit_decay_rates(hist: &CoincidenceHistogram, min_count: u64, background: f64) -> Result<DecayFit> {
    let centers = hist.centers();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (k, &c) in hist.counts.iter().enumerate() {
        let (lo, hi) = (hist.bin_edges[k], hist.bin_edges[k + 1]);
        if (c as f64) - background < min_count.max(1) as f64 || (lo < 0.0 && hi > 0.0) {
            continue;
        }
        if hi <= 0.0 {
            left.push((centers[k], c));
        } else {
            right.push((centers[k], c));
        }
    }
    let fail = || Error::InvalidParameter("too few populated bins to fit decay rates".into());
    let decay_s = log_linear_slope(&left, background).ok_or_else(fail)?;
    let decay_i = -log_linear_slope(&right, background).ok_or_else(fail)?;
    if !(decay_s > 0.0 && decay_i > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fitted decay rates are not positive ({decay_s}, {decay_i})"
        )));
    }
    Ok(DecayFit {
        decay_s,
        decay_i,
        correlation_time: correlation_time_estimate(decay_s, decay_i),
    })
}
