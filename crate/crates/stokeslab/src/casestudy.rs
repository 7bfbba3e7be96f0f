//! Named case studies with fixed inputs and publishable numbers.
//!
//! Each study rebuilds its system from the compiled-in definitions rather
//! than a config file, so the reports cannot drift from the library's own
//! test fixtures.

use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64 as C64;

use stokeslab_core::dynamics::{integrate_pair, partial_sum_seed, phase_grid, winding, zero_count};
use stokeslab_core::odesys::{check_distinct_arguments, singular_directions, standard};
use stokeslab_core::resum::{
    balanced_orders, borel_transform, exact, gevrey_estimate, pade, BorelEval, Resummer,
};
use stokeslab_core::stokes::{check_sd, measure_direction, StokesReport};
use stokeslab_core::CRat;

use crate::commands::{OptionSet, RunOutput};
use crate::config::{CliError, CliResult};
use crate::format::{fmt_float, Csv, Json};

fn header(name: &str, p: u32, r: usize) -> crate::format::JsonObject {
    Json::object().field("command", Json::str("casestudy")).field(
        "system",
        Json::object()
            .field("name", Json::str(name))
            .field("p", Json::Int(p as i64))
            .field("r", Json::Int(r as i64))
            .build(),
    )
}

/// Exact rational rendered as a decimal string ("6", "-3/2").
fn rat_str<T: std::fmt::Display>(q: &T) -> String {
    q.to_string()
}

pub fn run(name: &str, opts: &OptionSet) -> CliResult<RunOutput> {
    match name {
        "euler" => euler(opts),
        "euler2d" => euler2d(opts),
        "euler-pair" => euler_pair(opts),
        "odd-pump" => odd_pump(opts),
        "linking" => linking(opts),
        "counterexample" => counterexample(opts),
        other => Err(CliError::validation(format!(
            "unknown case study '{other}'; expected euler, euler2d, euler-pair, \
             odd-pump, linking, or counterexample"
        ))),
    }
}

/// Scalar Euler equation: exact coefficient table plus the measured Stokes
/// jump against the residue prediction `2 pi e^(-1/x)`.
fn euler(opts: &OptionSet) -> CliResult<RunOutput> {
    let order = 25;
    let sys_exact = standard::euler::<CRat>();
    let hhat = sys_exact.formal_solution(order)?;
    let coeff_json: Vec<Json> = (0..=order)
        .map(|n| Json::str(&rat_str(&hhat.component(0).coeff(n).re)))
        .collect();

    let sys = standard::euler::<C64>();
    let spectrum = sys.spectrum()?;
    let table = singular_directions(&spectrum, sys.p());
    // The jump at x = 0.05 is ~1.3e-8 while each lateral sum is ~0.1, so the
    // quadrature must be pushed well below the default tolerance for the
    // difference to carry six digits.
    let tol = opts.tol_or(1e-14)?;
    let rs = Resummer::new(vec![Box::new(exact::euler())], table, tol);

    let mut jumps = Vec::new();
    let mut csv = Csv::new(&[
        "x", "jump_re", "jump_im", "magnitude", "predicted", "rel_error",
    ]);
    let mut summary = String::from("Euler equation case study\n");
    summary.push_str(&format!(
        "coefficients (exact): {} ...\n",
        (1..=6)
            .map(|n| rat_str(&hhat.component(0).coeff(n).re))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    for &x in &[0.05, 0.1, 0.2] {
        let lat = rs.lateral_sums(0, C64::from(x))?;
        let jump = lat.jump()[0];
        let magnitude = jump.norm();
        let predicted = TAU * (-1.0 / x).exp();
        let rel_error = (magnitude - predicted).abs() / predicted;
        csv.row(vec![
            fmt_float(x),
            fmt_float(jump.re),
            fmt_float(jump.im),
            fmt_float(magnitude),
            fmt_float(predicted),
            fmt_float(rel_error),
        ]);
        jumps.push(
            Json::object()
                .field("x", Json::Float(x))
                .field("jump", Json::complex(jump))
                .field("magnitude", Json::Float(magnitude))
                .field("predicted", Json::Float(predicted))
                .field("rel_error", Json::Float(rel_error))
                .field("est_error", Json::Float(lat.est_error))
                .build(),
        );
        summary.push_str(&format!(
            "x = {x}: |jump| = {magnitude:.6e}, predicted 2 pi e^(-1/x) = \
             {predicted:.6e}, relative error {rel_error:.2e}\n"
        ));
    }

    let report = header("euler", 1, 1)
        .field(
            "options",
            Json::object().field("tol", Json::Float(tol)).build(),
        )
        .field("coefficients", Json::Array(coeff_json))
        .field("jumps", Json::Array(jumps))
        .build();
    Ok(RunOutput {
        report,
        summary,
        csvs: vec![("jumps.csv".to_owned(), csv.render())],
    })
}

/// Two-dimensional rotating Euler variant: singular directions, decay
/// rates, multiplier conjugacy, and the nonresonance verdict.
fn euler2d(opts: &OptionSet) -> CliResult<RunOutput> {
    let sys = standard::euler2d::<C64>();
    let spectrum = sys.spectrum()?;
    let table = singular_directions(&spectrum, sys.p());
    let expected = [FRAC_PI_4, 7.0 * FRAC_PI_4];
    let dir_errors: Vec<f64> = table
        .entries
        .iter()
        .zip(&expected)
        .map(|(e, &want)| (e.theta - want).abs())
        .collect();

    let tol = opts.tol_or(1e-11)?;
    let [b1, b2] = exact::euler2d();
    let rs = Resummer::new(vec![Box::new(b1), Box::new(b2)], table, tol);
    let reports: Vec<StokesReport> = (0..2)
        .map(|i| measure_direction(&rs, &spectrum, i, None))
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;
    let sd = check_sd(&reports, &spectrum, rs.directions())?;

    let sqrt2 = 2.0_f64.sqrt();
    let rate_errors: Vec<f64> = reports
        .iter()
        .map(|r| (r.decay.rate - sqrt2).abs() / sqrt2)
        .collect();
    // With the fixed counterclockwise orientation at both directions the
    // paired multipliers come out as minus conjugates of each other.
    let g0 = reports[0].multiplier.gamma;
    let g1 = reports[1].multiplier.gamma;
    let conj_deviation = (g1 + g0.conj()).norm() / g0.norm();

    let dirs_json: Vec<Json> = table_json(&reports, &dir_errors, &rate_errors);
    let report = header("euler2d", 1, 2)
        .field(
            "options",
            Json::object().field("tol", Json::Float(tol)).build(),
        )
        .field("eigenvalues", eigen_json(&spectrum.eigenvalues))
        .field("directions", Json::Array(dirs_json))
        .field("conjugacy_deviation", Json::Float(conj_deviation))
        .field("sd_holds", Json::Bool(sd.holds))
        .build();

    let mut summary = String::from("two-dimensional Euler variant case study\n");
    for (i, r) in reports.iter().enumerate() {
        summary.push_str(&format!(
            "direction {i}: theta = {:.12} (|error| vs {} = {:.2e}), \
             decay rate {:.6} vs sqrt(2) ({:.2}%), gamma = {:.6} {:+.6}i\n",
            r.direction.theta,
            if i == 0 { "pi/4" } else { "7 pi/4" },
            dir_errors[i],
            r.decay.rate,
            100.0 * rate_errors[i],
            r.multiplier.gamma.re,
            r.multiplier.gamma.im,
        ));
    }
    summary.push_str(&format!(
        "multiplier pairing: gamma(7 pi/4) vs -conj gamma(pi/4) deviates by \
         {:.2}%\n",
        100.0 * conj_deviation
    ));
    summary.push_str(&format!("SD check holds: {}\n", sd.holds));
    Ok(RunOutput { report, summary, csvs: Vec::new() })
}

fn eigen_json(eigenvalues: &[C64]) -> Json {
    Json::Array(eigenvalues.iter().map(|&l| Json::complex(l)).collect())
}

fn table_json(
    reports: &[StokesReport],
    dir_errors: &[f64],
    rate_errors: &[f64],
) -> Vec<Json> {
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Json::object()
                .field("theta", Json::Float(r.direction.theta))
                .field("theta_error", Json::Float(dir_errors[i]))
                .field("decay_rate", Json::Float(r.decay.rate))
                .field("rate_rel_error", Json::Float(rate_errors[i]))
                .field("gamma", Json::complex(r.multiplier.gamma))
                .field("significant", Json::Bool(r.significant))
                .build()
        })
        .collect()
}

/// Diagonal pair with eigenvalues 1 and 1/2: the distinct-argument
/// condition fails because both singularities sit on the ray theta = 0.
fn euler_pair(opts: &OptionSet) -> CliResult<RunOutput> {
    let order = opts.order.unwrap_or(24).clamp(17, 64);
    let sys = standard::euler_pair::<C64>();
    let spectrum = sys.spectrum()?;
    let check = check_distinct_arguments(&spectrum);
    let table = singular_directions(&spectrum, sys.p());
    let hhat = sys.formal_solution(order)?;

    let mut components = Vec::new();
    let mut summary = String::from("shared-direction pair case study\n");
    summary.push_str(&format!(
        "eigenvalues: {}; distinct-argument condition holds: {}\n",
        spectrum
            .eigenvalues
            .iter()
            .map(|l| format!("{:.4}", l.re))
            .collect::<Vec<_>>()
            .join(", "),
        check.ok
    ));
    for (i, j) in &check.coincident_pairs {
        summary.push_str(&format!(
            "eigenvalues {i} and {j} share their argument: every Laplace ray \
             near theta = 0 meets both Borel singularities\n"
        ));
    }
    for j in 0..sys.dim() {
        let b = borel_transform(hhat.component(j), sys.p())?;
        let (l, m) = balanced_orders(b.coeffs().len(), 8);
        let approx = pade(&b, l, m)?;
        let mut poles = approx.poles().to_vec();
        poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let target = if j == 0 { 1.0 } else { 0.5 };
        let nearest = poles
            .iter()
            .map(|z| (z - C64::from(target)).norm())
            .fold(f64::INFINITY, f64::min);
        summary.push_str(&format!(
            "component {j}: Borel singularity recovered at distance {nearest:.2e} \
             from t = {target}\n"
        ));
        components.push(
            Json::object()
                .field("component", Json::Int(j as i64))
                .field(
                    "poles",
                    Json::Array(poles.iter().map(|&z| Json::complex(z)).collect()),
                )
                .field("expected_pole", Json::Float(target))
                .field("pole_error", Json::Float(nearest))
                .build(),
        );
    }
    summary.push_str(
        "both directions in the table lie on theta = 0, so no single ray \
         separates the two components' singularities\n",
    );

    let report = header("euler-pair", 1, 2)
        .field(
            "options",
            Json::object().field("order", Json::Int(order as i64)).build(),
        )
        .field("eigenvalues", eigen_json(&spectrum.eigenvalues))
        .field("distinct_arguments", Json::Bool(check.ok))
        .field(
            "coincident_pairs",
            Json::Array(
                check
                    .coincident_pairs
                    .iter()
                    .map(|&(i, j)| {
                        Json::Array(vec![Json::Int(i as i64), Json::Int(j as i64)])
                    })
                    .collect(),
            ),
        )
        .field(
            "directions",
            Json::Array(
                table
                    .entries
                    .iter()
                    .map(|e| Json::Float(e.theta))
                    .collect(),
            ),
        )
        .field("components", Json::Array(components))
        .build();
    Ok(RunOutput { report, summary, csvs: Vec::new() })
}

/// Odd pump at p = 2: exact odd coefficients `2^n n!`, exact order-2 Borel
/// transform, Pade pole pair, and the Gevrey exponent.
fn odd_pump(opts: &OptionSet) -> CliResult<RunOutput> {
    let order = 25;
    let sys_exact = standard::odd_pump::<CRat>();
    let hhat = sys_exact.formal_solution(order)?;
    let series = hhat.component(0);
    let coeff_json: Vec<Json> = (0..=order)
        .map(|n| Json::str(&rat_str(&series.coeff(n).re)))
        .collect();
    let b_exact = borel_transform(series, sys_exact.p())?;
    let borel_json: Vec<Json> = b_exact
        .coeffs()
        .iter()
        .map(|c| Json::str(&rat_str(&c.re)))
        .collect();

    let sys = standard::odd_pump::<C64>();
    let gevrey_order = opts.order.unwrap_or(200).clamp(40, 512);
    let hf = sys.formal_solution(gevrey_order)?;
    let g = gevrey_estimate(hf.component(0))?;
    let bf = borel_transform(hf.component(0), sys.p())?;
    let approx = pade(&bf, 4, 4)?;
    let mut poles = approx.poles().to_vec();
    poles.sort_by(|a, b| a.re.total_cmp(&b.re));
    let target = 0.5_f64.sqrt();
    let pole_errors: Vec<f64> = poles
        .iter()
        .map(|z| {
            (z - C64::from(target))
                .norm()
                .min((z + C64::from(target)).norm())
        })
        .collect();

    let report = header("odd-pump", 2, 1)
        .field(
            "options",
            Json::object()
                .field("gevrey_order", Json::Int(gevrey_order as i64))
                .build(),
        )
        .field("coefficients", Json::Array(coeff_json))
        .field("borel_coefficients", Json::Array(borel_json))
        .field(
            "pade_poles",
            Json::Array(poles.iter().map(|&z| Json::complex(z)).collect()),
        )
        .field(
            "pole_errors",
            Json::Array(pole_errors.iter().map(|&e| Json::Float(e)).collect()),
        )
        .field("gevrey_kappa", Json::Float(g.kappa))
        .build();

    let mut summary = String::from("odd pump case study (p = 2)\n");
    summary.push_str(&format!(
        "odd coefficients c_1, c_3, c_5, ...: {} ...\n",
        (0..4)
            .map(|n| rat_str(&series.coeff(2 * n + 1).re))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    summary.push_str(&format!(
        "order-2 Borel coefficients b_0, b_2, b_4, ...: {} ... \
         (geometric, radius 1/sqrt 2)\n",
        (0..4)
            .map(|n| rat_str(&b_exact.coeffs()[2 * n].re))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    summary.push_str(&format!(
        "[4/4] Pade poles vs +-1/sqrt 2: max error {:.2e}\n",
        pole_errors.iter().fold(0.0_f64, |a, &b| a.max(b))
    ));
    summary.push_str(&format!(
        "Gevrey exponent from {gevrey_order} coefficients: kappa = {:.4} \
         (1/p = 0.5)\n",
        g.kappa
    ));
    Ok(RunOutput { report, summary, csvs: Vec::new() })
}

/// Shared integration for the two trajectory-pair studies.
fn trajectory_pair(
    opts: &OptionSet,
) -> CliResult<(Vec<f64>, Vec<C64>, Vec<f64>, f64, f64)> {
    let x_max = opts.grid_max.unwrap_or(0.3);
    let x_min = opts.grid_min.unwrap_or(0.02);
    if !(x_min > 0.0 && x_min < x_max) {
        return Err(CliError::validation(
            "grid bounds must satisfy 0 < grid-min < grid-max",
        ));
    }
    let tol = opts.tol_or(1e-10)?;
    let sys = standard::euler2d::<C64>();
    let hhat = sys.formal_solution(10)?;
    let grid = phase_grid(x_max, x_min, 1.0, sys.p(), 16);
    let seed = partial_sum_seed(&hhat, 3, x_max);
    let pair = integrate_pair(
        &sys,
        &grid,
        &seed,
        &[C64::new(0.04, 0.0), C64::new(0.03, 0.0)],
        tol,
    )?;
    let v: Vec<C64> = pair
        .difference
        .values()
        .iter()
        .map(|d| d[0] + C64::i() * d[1])
        .collect();
    let re1: Vec<f64> = pair.difference.values().iter().map(|d| d[0].re).collect();
    let xs = pair.difference.xs().to_vec();
    Ok((xs, v, re1, x_min, x_max))
}

/// Winding of the difference of two neighbouring trajectories of the
/// two-dimensional system, against the phase-change prediction.
fn linking(opts: &OptionSet) -> CliResult<RunOutput> {
    let (xs, v, _, x_min, x_max) = trajectory_pair(opts)?;
    let turns = winding(&v)?.abs();
    let ideal = (1.0 / x_min - 1.0 / x_max) / TAU;
    let rel_error = (turns - ideal).abs() / ideal;

    let mut csv = Csv::new(&["x", "diff_re", "diff_im", "abs"]);
    for (x, d) in xs.iter().zip(&v) {
        csv.row(vec![
            fmt_float(*x),
            fmt_float(d.re),
            fmt_float(d.im),
            fmt_float(d.norm()),
        ]);
    }

    let report = header("linking", 1, 2)
        .field(
            "options",
            Json::object()
                .field("grid_min", Json::Float(x_min))
                .field("grid_max", Json::Float(x_max))
                .build(),
        )
        .field("samples", Json::Int(v.len() as i64))
        .field("turns", Json::Float(turns))
        .field("predicted_turns", Json::Float(ideal))
        .field("rel_error", Json::Float(rel_error))
        .build();
    let summary = format!(
        "trajectory-pair linking case study\n\
         difference vector of two solutions over [{x_min}, {x_max}]: \
         {turns:.4} turns\n\
         phase prediction (1/{x_min} - 1/{x_max}) / 2 pi = {ideal:.4} \
         ({:.1}% off)\n",
        100.0 * rel_error
    );
    Ok(RunOutput {
        report,
        summary,
        csvs: vec![("difference.csv".to_owned(), csv.render())],
    })
}

/// Oscillating crossing counterexample: the difference of two solutions
/// changes sign again and again, so the locus where the pair agrees in one
/// coordinate accumulates at the origin.
fn counterexample(opts: &OptionSet) -> CliResult<RunOutput> {
    let (xs, v, re1, x_min, x_max) = trajectory_pair(opts)?;
    let crossings = zero_count(&re1);
    let turns = winding(&v)?.abs();
    // Two sign changes of the real part per full turn of the phase.
    let expected = (2.0 * turns).round() as i64;

    let mut csv = Csv::new(&["x", "re_diff_1"]);
    for (x, r) in xs.iter().zip(&re1) {
        csv.row(vec![fmt_float(*x), fmt_float(*r)]);
    }

    let report = header("counterexample", 1, 2)
        .field(
            "options",
            Json::object()
                .field("grid_min", Json::Float(x_min))
                .field("grid_max", Json::Float(x_max))
                .build(),
        )
        .field("zero_count", Json::Int(crossings as i64))
        .field("turns", Json::Float(turns))
        .field("expected_crossings", Json::Int(expected))
        .build();
    let summary = format!(
        "crossing counterexample case study\n\
         first component of the trajectory difference changes sign \
         {crossings} times on [{x_min}, {x_max}] (about two per turn of \
         {turns:.2})\n\
         the two solutions therefore agree in that coordinate on a set with \
         an accumulation point at the origin, ruling out any analytic \
         separation argument\n",
    );
    Ok(RunOutput {
        report,
        summary,
        csvs: vec![("crossings.csv".to_owned(), csv.render())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_opts() -> OptionSet {
        OptionSet::default()
    }

    #[test]
    fn euler_jump_matches_residue_prediction() {
        let out = euler(&base_opts()).unwrap();
        let rendered = out.report.render();
        assert!(rendered.contains("\"coefficients\""));
        // The order-25 table reaches 24!.
        assert!(rendered.contains("620448401733239439360000"));
        assert!(out.summary.contains("x = 0.1"));
    }

    #[test]
    fn euler2d_directions_and_sd() {
        let out = euler2d(&base_opts()).unwrap();
        let rendered = out.report.render();
        assert!(rendered.contains("\"sd_holds\": true"));
        assert!(out.summary.contains("SD check holds: true"));
    }

    #[test]
    fn euler_pair_flags_shared_argument() {
        let out = euler_pair(&base_opts()).unwrap();
        let rendered = out.report.render();
        assert!(rendered.contains("\"distinct_arguments\": false"));
        assert!(out.summary.contains("share their argument"));
    }

    #[test]
    fn odd_pump_reports_exact_tables() {
        let out = odd_pump(&base_opts()).unwrap();
        let rendered = out.report.render();
        // c_11 = 2^5 5! = 3840 and b_10 = 2^5 = 32.
        assert!(rendered.contains("\"3840\""));
        assert!(rendered.contains("\"32\""));
    }

    #[test]
    fn linking_and_counterexample_agree_on_the_pair() {
        let link = linking(&base_opts()).unwrap();
        assert!(link.summary.contains("turns"));
        let counter = counterexample(&base_opts()).unwrap();
        assert!(counter.report.render().contains("\"zero_count\""));
    }

    #[test]
    fn unknown_name_is_a_validation_error() {
        let err = run("nope", &base_opts()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
