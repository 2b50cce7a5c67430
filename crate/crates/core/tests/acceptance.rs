//! Acceptance run against the shipped configurations. Prints one line per
//! criterion and exits non-zero if any criterion fails.

use std::f64::consts::{LN_2, PI};
use std::path::PathBuf;

use bwspdc::biphoton::{
    self, brightness, coefficients, g2_closed_form, g2_fourier, pair_rate, pair_rate_quadrature,
    PairedModes,
};
use bwspdc::cavity::DecayRates;
use bwspdc::config::LoadedConfig;
use bwspdc::numerics::linspace;
use bwspdc::oracle::{cavity_transfer_oracle, spatial_two_port, Integrator, SeededRun, SpatialProblem};
use bwspdc::pairgen::{
    accidental_density, coincidence_cdf, coincidence_delays, fit_decay_rates, generate, histogram,
    ks_critical_1pct, ks_distance,
};
use bwspdc::phasematch::{freespace_coefficients, gain_linewidth, Geometry};
use bwspdc::source::{FullReport, Model};
use bwspdc::units::{rad_s_to_ghz, rad_s_to_mhz, rad_s_to_wavenumber_cm, s_to_ns};
use num_complex::Complex64;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn model(name: &str) -> Model {
    let loaded = LoadedConfig::load(config(name), &[]).expect("shipped config loads");
    Model::new(&loaded).expect("model builds")
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value / target - 1.0).abs() <= rel
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gain_linewidth_backward(r: &FullReport) -> Outcome {
    let g = r.phase_match.gain_linewidth_backward;
    let exact = r.phase_match.gain_linewidth_backward_exact;
    outcome(
        within(g, 2.0 * PI * 2.4e9, 0.20) && within(exact, 2.0 * PI * 2.4e9, 0.20),
        format!(
            "gain linewidth 2pi x {:.4} GHz (exact-mismatch FWHM {:.4} GHz); target 2.4 GHz +-20%",
            rad_s_to_ghz(g),
            rad_s_to_ghz(exact)
        ),
    )
}

fn backward_forward(r: &FullReport) -> Outcome {
    let x = r.phase_match.backward_forward_ratio;
    outcome(within(x, 38.0, 0.15), format!("backward/forward ratio {x:.3}; target 38 +-15%"))
}

fn poling(r: &FullReport) -> Outcome {
    let nm = r.design.poling_period * 1e9;
    outcome(
        r.design.qpm_order == 3 && within(nm, 872.0, 0.02),
        format!("poling period {nm:.3} nm at m = {}; target 872 nm +-2%", r.design.qpm_order),
    )
}

fn cluster(r: &FullReport) -> Outcome {
    let c = &r.cavity;
    let cm = rad_s_to_wavenumber_cm(c.cluster.spacing);
    outcome(
        within(cm, 1.75, 0.25) && c.single_mode.single_mode && c.single_mode.margin > 10.0,
        format!(
            "cluster spacing 2pi x {cm:.4} cm^-1, single mode {} with margin {:.2}; target 1.75 cm^-1 +-25%, margin > 10",
            c.single_mode.single_mode, c.single_mode.margin
        ),
    )
}

fn linewidth(r: &FullReport) -> Outcome {
    let f = r.cavity.rates.finesse_s.min(r.cavity.rates.finesse_i);
    let mhz = rad_s_to_mhz(r.biphoton.linewidth);
    outcome(
        (f - 1000.0).abs() < 1e-6 && within(mhz, 2.1, 0.30),
        format!("biphoton linewidth 2pi x {mhz:.4} MHz at finesse {f:.1}; target 2.1 MHz +-30%"),
    )
}

fn correlation_time(default: &FullReport, lossy: &FullReport) -> Outcome {
    let tc = s_to_ns(default.biphoton.correlation_time);
    let tl = s_to_ns(lossy.biphoton.correlation_time);
    let identity = default.biphoton.correlation_time
        == LN_2 * (1.0 / default.cavity.rates.decay_s + 1.0 / default.cavity.rates.decay_i);
    outcome(
        within(tc, 68.0, 0.20) && tl > 65.0 && within(tl, 68.0, 0.20) && identity,
        format!("T_c {tc:.3} ns (default), {tl:.3} ns (lossy config); target 68 ns +-20% and > 65 ns"),
    )
}

fn brightness_consistency(r: &FullReport) -> Outcome {
    // identity on the simulator's own R1 and linewidth
    let own = r.biphoton.rate / rad_s_to_mhz(r.biphoton.linewidth);
    let own_ok = (r.biphoton.brightness_per_mhz / own - 1.0).abs() < 1e-12
        && (r.biphoton.brightness_per_mhz_per_mw / (own / (r.pump_power * 1e3)) - 1.0).abs() < 1e-12;
    // the same brightness path applied to the quoted rate and linewidth
    let quoted = brightness(1.31e5, 2.0 * PI * 2.1e6, 770e-6).expect("positive linewidth");
    let calibrated = within(r.biphoton.rate, 1.31e5, 1e-9);
    outcome(
        own_ok && calibrated && within(quoted.per_mhz, 6.25e4, 0.02) && within(quoted.per_mhz_per_mw, 8.16e4, 0.02),
        format!(
            "from R1 = 1.31e5/s and 2pi x 2.1 MHz: {:.4e} /s/MHz, {:.4e} /s/MHz/mW (targets 6.25e4, 8.16e4 +-2%); simulator's own R1 {:.4e}/s over 2pi x {:.4} MHz gives {:.4e} /s/MHz",
            quoted.per_mhz,
            quoted.per_mhz_per_mw,
            r.biphoton.rate,
            rad_s_to_mhz(r.biphoton.linewidth),
            r.biphoton.brightness_per_mhz
        ),
    )
}

fn forward_ratio(r: &FullReport) -> Outcome {
    let x = r.forward.ratio;
    outcome(
        (8e4 / 2.0..=8e4 * 2.0).contains(&x),
        format!("resonant/forward brightness ratio {x:.4e}; target 8e4 within a factor of 2"),
    )
}

fn properties(m: &Model) -> Outcome {
    let (modes, _) = m.paired_modes().expect("modes");
    let r = modes.rates;
    let lossless = DecayRates::from_rates(r.decay_s, r.decay_i, r.decay_s, r.decay_i);
    let lm = PairedModes { rates: lossless, ..modes };
    let grid = m.spectrum_grid(&r);
    let mut notes = Vec::new();
    let mut pass = true;

    let c = coefficients(&lm, &grid).expect("coefficients");
    let unit = c
        .a1
        .iter()
        .chain(&c.d1)
        .map(|z| (z.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    pass &= unit <= 1e-12;
    notes.push(format!("|A1|,|D1| dev {unit:.1e}"));

    let c = coefficients(&modes, &grid).expect("coefficients");
    let s = biphoton::spectrum(&c);
    // closed form evaluated independently of the coefficient arrays
    let closed = |w: f64| {
        let ds = w - modes.omega_q;
        let di = modes.omega_pump - w - modes.omega_r;
        8.0 * r.coupling_s * r.coupling_i * modes.kappa1.norm_sqr()
            / (PI * (4.0 * ds * ds + r.decay_s * r.decay_s) * (4.0 * di * di + r.decay_i * r.decay_i))
    };
    let ident = s
        .omega
        .iter()
        .zip(&s.density)
        .map(|(&w, &v)| (v / closed(w) - 1.0).abs())
        .fold(0.0, f64::max);
    pass &= ident <= 1e-12;
    notes.push(format!("S1 identity {ident:.1e}"));

    let rate = pair_rate(&r, modes.kappa1).expect("rate");
    let quad = (pair_rate_quadrature(&s) / rate - 1.0).abs();
    pass &= quad <= 1e-3;
    notes.push(format!("quadrature {quad:.1e}"));

    let half = 5.0 / lossless.min_decay();
    let fourier = linspace(-half, half, 41)
        .into_iter()
        .map(|t| (g2_fourier(&lm, t) / g2_closed_form(&lossless, lm.kappa1, t) - 1.0).abs())
        .fold(0.0, f64::max);
    pass &= fourier <= 1e-6;
    notes.push(format!("Fourier G2 {fourier:.1e}"));

    let scale = 1.7;
    let scaled = PairedModes {
        kappa1: modes.kappa1 * scale,
        ..modes
    };
    let cs = coefficients(&scaled, &grid).expect("coefficients");
    let ss = biphoton::spectrum(&cs);
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
            .0
    };
    let s2 = scale * scale;
    let spec_dev = s
        .density
        .iter()
        .zip(&ss.density)
        .map(|(a, b)| (b / (a * s2) - 1.0).abs())
        .fold(0.0, f64::max);
    let rate_dev = (pair_rate(&r, scaled.kappa1).unwrap() / (rate * s2) - 1.0).abs();
    let g2_dev = (g2_closed_form(&r, scaled.kappa1, 3e-8) / (g2_closed_form(&r, modes.kappa1, 3e-8) * s2) - 1.0).abs();
    let scaling = spec_dev.max(rate_dev).max(g2_dev);
    let invariant = ss.linewidth == s.linewidth && argmax(&ss.density) == argmax(&s.density);
    pass &= scaling <= 1e-12 && invariant;
    notes.push(format!("kappa1 scaling {scaling:.1e}"));

    let eps = 1e-3 / r.max_decay();
    let left = g2_closed_form(&r, modes.kappa1, -eps * 1e-9);
    let right = g2_closed_form(&r, modes.kappa1, eps * 1e-9);
    let cont = (left / right - 1.0).abs();
    pass &= cont <= 1e-9;
    notes.push(format!("G2(0-)/G2(0+) dev {cont:.1e}"));

    outcome(pass, format!("properties: {}", notes.join(", ")))
}

fn oracles(m: &Model) -> Outcome {
    let (modes, _) = m.paired_modes().expect("modes");
    let r = modes.rates;
    let probe = PairedModes {
        kappa1: Complex64::new(1e-4 * r.min_decay(), 0.0),
        ..modes
    };
    let mut cavity = 0.0f64;
    for delta in linspace(-3.0 * r.max_decay(), 3.0 * r.max_decay(), 21) {
        let out = cavity_transfer_oracle(&probe, &SeededRun::for_modes(&probe, delta, Integrator::Rk4))
            .expect("oracle converges");
        let w = probe.omega_q + delta;
        cavity = cavity
            .max((out.signal_ratio - probe.a1(w)).norm() / probe.a1(w).norm())
            .max((out.idler_ratio - probe.c1(w)).norm() / probe.c1(w).norm());
    }
    let crystal = m.crystal.with_geometry(Geometry::Backward);
    let kappa = 1e-5 / crystal.length;
    let width = gain_linewidth(&crystal, Geometry::Backward, modes.omega_q, m.omega_pump).unwrap();
    let grid = [modes.omega_q, modes.omega_q + 0.7 * width, modes.omega_q - 1.9 * width];
    let closed = freespace_coefficients(&crystal, kappa, &grid, m.omega_pump).unwrap();
    let mut spatial = 0.0f64;
    for (j, &w) in grid.iter().enumerate() {
        let t = spatial_two_port(&SpatialProblem::from_crystal(&crystal, kappa, w, m.omega_pump).unwrap()).unwrap();
        for (a, b) in [(t.a, closed.a[j]), (t.b, closed.b[j]), (t.c, closed.c[j]), (t.d, closed.d[j])] {
            spatial = spatial.max((a - b).norm() / b.norm());
        }
    }
    let mut zero = SpatialProblem::from_crystal(&crystal, 1e-3 / crystal.length, modes.omega_q, m.omega_pump).unwrap();
    zero.delta_k = 2.0 * PI / crystal.length;
    let b_zero = spatial_two_port(&zero).unwrap().b.norm();
    outcome(
        cavity <= 1e-6 && spatial <= 1e-8 && b_zero <= 1e-8,
        format!(
            "cavity ODE vs A1/C1 {cavity:.2e} (<= 1e-6, 21 detunings); spatial BVP vs A-D {spatial:.2e} (<= 1e-8); |B| at sinc zero {b_zero:.2e} (<= 1e-8)"
        ),
    )
}

fn events(m: &Model, r: &FullReport) -> Outcome {
    let rates = r.cavity.rates;
    let target_pairs = 1e5;
    let stream = generate(r.biphoton.rate, rates.decay_s, rates.decay_i, target_pairs / r.biphoton.rate, 2024)
        .expect("stream");
    let window = m.config.events.histogram_window_gamma / rates.min_decay();
    let density = accidental_density(&stream);
    let mut d = coincidence_delays(&stream, window).expect("coincidences");
    d.sort_by(f64::total_cmp);
    let fraction = density * 2.0 * window / d.len() as f64;
    let ks = ks_distance(&d, |x| coincidence_cdf(x, rates.decay_s, rates.decay_i, window, fraction));
    let crit = ks_critical_1pct(d.len());
    let hist = histogram(&stream, window, 2.0 * window / m.config.events.histogram_bins as f64).unwrap();
    let fit = fit_decay_rates(&hist, 5, density * hist.bin_width()).expect("fit");
    let es = (fit.decay_s / rates.decay_s - 1.0).abs();
    let ei = (fit.decay_i / rates.decay_i - 1.0).abs();
    outcome(
        stream.pairs >= 99_000 && ks < crit && es <= 0.05 && ei <= 0.05,
        format!(
            "{} pairs, KS {ks:.2e} < {crit:.2e}; fitted Gamma_s, Gamma_i off by {:.2}%, {:.2}% (<= 5%)",
            stream.pairs,
            100.0 * es,
            100.0 * ei
        ),
    )
}

fn main() {
    let default = model("ppktp_default.toml");
    let lossy = model("ppktp_lossy.toml");
    let rd = default.report().expect("default report");
    let rl = lossy.report().expect("lossy report");

    let results: Vec<(&str, Outcome)> = vec![
        ("backward gain linewidth", gain_linewidth_backward(&rd)),
        ("backward/forward ratio", backward_forward(&rd)),
        ("poling period", poling(&rd)),
        ("cluster spacing", cluster(&rd)),
        ("biphoton linewidth", linewidth(&rd)),
        ("correlation time", correlation_time(&rd, &rl)),
        ("brightness consistency", brightness_consistency(&rd)),
        ("resonant vs forward", forward_ratio(&rd)),
        ("property suite", properties(&default)),
        ("oracle suite", oracles(&default)),
        ("event statistics", events(&default, &rd)),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {} {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
