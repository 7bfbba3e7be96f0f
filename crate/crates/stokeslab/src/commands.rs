//! One function per subcommand, all pure: they take parsed inputs and
//! resolved options and return the report bundle; file writing and exit
//! codes live in the crate root.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use stokeslab_core::coeff::Coeff;
use stokeslab_core::dynamics;
use stokeslab_core::probes::{self, ProbeMode};
use stokeslab_core::resum::{balanced_orders, borel_transform, gevrey_estimate, pade, BorelEval};
use stokeslab_core::stokes::{check_sd, measure_direction, StokesReport};

use crate::analyses::{build_resummer, check_tol, fixed_grid, seeded_trajectory};
use crate::config::{CliError, CliResult, OverrideFile, ProbeSpecFile, SystemFile};
use crate::format::{fmt_float, Csv, Json};

/// Everything a command produces; the caller writes it to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Json,
    pub summary: String,
    pub csvs: Vec<(String, String)>,
}

/// Numeric options after merging flags and the optional config file.
///
/// Precedence is config file over flags over per-command defaults, as
/// documented in the README; fields still `None` here pick up defaults
/// inside each command.
#[derive(Debug, Clone, Default)]
pub struct OptionSet {
    pub order: Option<usize>,
    pub tol: Option<f64>,
    pub theta: Option<f64>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub seed: Option<u64>,
}

impl OptionSet {
    /// Applies config-file overrides on top of flag values.
    pub fn overlay(mut self, o: &OverrideFile) -> Self {
        if o.order.is_some() {
            self.order = o.order;
        }
        if o.tol.is_some() {
            self.tol = o.tol;
        }
        if o.theta.is_some() {
            self.theta = o.theta;
        }
        if o.grid_min.is_some() {
            self.grid_min = o.grid_min;
        }
        if o.grid_max.is_some() {
            self.grid_max = o.grid_max;
        }
        if o.grid_points.is_some() {
            self.grid_points = o.grid_points;
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        self
    }

    pub(crate) fn order_or(&self, default: usize, max: usize) -> CliResult<usize> {
        let order = self.order.unwrap_or(default);
        if order < 1 || order > max {
            return Err(CliError::validation(format!(
                "order must lie in 1..={max}"
            )));
        }
        Ok(order)
    }

    pub(crate) fn tol_or(&self, default: f64) -> CliResult<f64> {
        check_tol(self.tol.unwrap_or(default))
    }

    pub(crate) fn grid_or(&self, min: f64, max: f64, points: usize) -> CliResult<Vec<f64>> {
        fixed_grid(
            self.grid_min.unwrap_or(min),
            self.grid_max.unwrap_or(max),
            self.grid_points.unwrap_or(points),
        )
    }
}

fn system_header(command: &str, file: &SystemFile) -> crate::format::JsonObject {
    Json::object().field("command", Json::str(command)).field(
        "system",
        Json::object()
            .field("name", Json::str(file.label()))
            .field("p", Json::Int(file.p as i64))
            .field("r", Json::Int(file.r as i64))
            .build(),
    )
}

fn options_json(fields: Vec<(&str, Json)>, seed: Option<u64>) -> Json {
    let mut o = Json::object();
    for (k, v) in fields {
        o = o.field(k, v);
    }
    o = o.field(
        "seed",
        match seed {
            Some(s) => Json::Int(s as i64),
            None => Json::Null,
        },
    );
    o.build()
}

/// Formats a float for the human summary: integers plainly, the rest in
/// short scientific form.
fn human(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.6e}")
    }
}

pub fn solve(file: &SystemFile, opts: &OptionSet) -> CliResult<RunOutput> {
    let order = opts.order_or(25, 512)?;
    let sys = file.to_c64()?;
    let hhat = sys.formal_solution(order)?;

    let mut components = Vec::with_capacity(sys.dim());
    let mut csv = Csv::new(&["n", "component", "re", "im"]);
    for j in 0..sys.dim() {
        let mut coeffs = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let c = hhat.component(j).coeff(n);
            coeffs.push(Json::complex(c));
            csv.row(vec![
                n.to_string(),
                j.to_string(),
                fmt_float(c.re),
                fmt_float(c.im),
            ]);
        }
        components.push(Json::Array(coeffs));
    }

    let report = system_header("solve", file)
        .field(
            "options",
            options_json(vec![("order", Json::Int(order as i64))], opts.seed),
        )
        .field("coefficients", Json::Array(components))
        .build();

    let mut summary = format!(
        "formal solution of {} through order {order}\n",
        file.label()
    );
    for j in 0..sys.dim() {
        let head: Vec<String> = (1..=order.min(8))
            .map(|n| {
                let c = hhat.component(j).coeff(n);
                if c.im == 0.0 {
                    human(c.re)
                } else {
                    format!("{}{:+}i", human(c.re), c.im)
                }
            })
            .collect();
        summary.push_str(&format!(
            "component {j}: {} ...\n",
            head.join(", ")
        ));
    }

    Ok(RunOutput {
        report,
        summary,
        csvs: vec![("coefficients.csv".to_owned(), csv.render())],
    })
}

pub fn gevrey(file: &SystemFile, opts: &OptionSet) -> CliResult<RunOutput> {
    let order = opts.order_or(200, 512)?;
    let sys = file.to_c64()?;
    let hhat = sys.formal_solution(order)?;

    let mut estimates = Vec::with_capacity(sys.dim());
    let mut summary = format!(
        "Gevrey fit for {} with {order} coefficients\n",
        file.label()
    );
    for j in 0..sys.dim() {
        let g = gevrey_estimate(hhat.component(j))?;
        estimates.push(
            Json::object()
                .field("component", Json::Int(j as i64))
                .field("kappa", Json::Float(g.kappa))
                .field("log_a", Json::Float(g.log_a))
                .field("constant", Json::Float(g.constant))
                .field("residual_rms", Json::Float(g.residual_rms))
                .field(
                    "window",
                    Json::Array(vec![
                        Json::Int(g.window.0 as i64),
                        Json::Int(g.window.1 as i64),
                    ]),
                )
                .field("points", Json::Int(g.points as i64))
                .build(),
        );
        summary.push_str(&format!(
            "component {j}: kappa = {:.4} (expected 1/p = {:.4} for a divergent solution)\n",
            g.kappa,
            1.0 / sys.p() as f64
        ));
    }

    let report = system_header("gevrey", file)
        .field(
            "options",
            options_json(vec![("order", Json::Int(order as i64))], opts.seed),
        )
        .field("estimates", Json::Array(estimates))
        .build();
    Ok(RunOutput { report, summary, csvs: Vec::new() })
}

pub fn borel(file: &SystemFile, opts: &OptionSet) -> CliResult<RunOutput> {
    let order = opts.order_or(24, 256)?;
    let sys = file.to_c64()?;
    let hhat = sys.formal_solution(order)?;

    let mut components = Vec::with_capacity(sys.dim());
    let mut coeff_csv = Csv::new(&["m", "component", "re", "im"]);
    let mut pole_csv = Csv::new(&["component", "re", "im"]);
    let mut summary = format!(
        "Borel transform (order p = {}) of {} from {order} coefficients\n",
        sys.p(),
        file.label()
    );
    for j in 0..sys.dim() {
        let b = borel_transform(hhat.component(j), sys.p())?;
        let (l, m) = balanced_orders(b.coeffs().len(), 12);
        let approx = pade(&b, l, m)?;
        let mut poles = approx.poles().to_vec();
        poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

        for (mm, c) in b.coeffs().iter().enumerate() {
            coeff_csv.row(vec![
                mm.to_string(),
                j.to_string(),
                fmt_float(c.re),
                fmt_float(c.im),
            ]);
        }
        for pole in &poles {
            pole_csv.row(vec![j.to_string(), fmt_float(pole.re), fmt_float(pole.im)]);
        }

        let nearest = poles
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        summary.push_str(&format!(
            "component {j}: [{l}/{m}] Pade, {} poles, nearest at |t| = {}\n",
            poles.len(),
            if nearest.is_finite() {
                format!("{nearest:.6}")
            } else {
                "none".to_owned()
            }
        ));

        components.push(
            Json::object()
                .field("component", Json::Int(j as i64))
                .field(
                    "coefficients",
                    Json::Array(b.coeffs().iter().map(|&c| Json::complex(c)).collect()),
                )
                .field(
                    "pade",
                    Json::object()
                        .field("num_degree", Json::Int(l as i64))
                        .field("den_degree", Json::Int(m as i64))
                        .build(),
                )
                .field(
                    "poles",
                    Json::Array(poles.iter().map(|&z| Json::complex(z)).collect()),
                )
                .build(),
        );
    }

    let report = system_header("borel", file)
        .field(
            "options",
            options_json(vec![("order", Json::Int(order as i64))], opts.seed),
        )
        .field("components", Json::Array(components))
        .build();
    Ok(RunOutput {
        report,
        summary,
        csvs: vec![
            ("borel.csv".to_owned(), coeff_csv.render()),
            ("poles.csv".to_owned(), pole_csv.render()),
        ],
    })
}

pub fn resum(file: &SystemFile, opts: &OptionSet) -> CliResult<RunOutput> {
    let order = opts.order_or(32, 256)?;
    let tol = opts.tol_or(1e-10)?;
    let grid = opts.grid_or(0.05, 0.2, 16)?;
    let sys = file.to_c64()?;
    let (rs, _, _) = build_resummer(&sys, order, tol)?;

    if let Some(theta) = opts.theta {
        // Points are taken along the ray itself, where the kernel decays.
        let rows: Vec<_> = grid
            .par_iter()
            .map(|&x| {
                let z = C64::from_polar(x, theta);
                rs.eval_along(theta, z).map(|q| (z, q))
            })
            .collect::<Result<_, _>>()
            .map_err(CliError::from)?;
        let mut csv = Csv::new(&[
            "z_re", "z_im", "component", "value_re", "value_im", "est_error",
        ]);
        let mut max_err = 0.0_f64;
        for (z, quads) in &rows {
            for (j, q) in quads.iter().enumerate() {
                csv.row(vec![
                    fmt_float(z.re),
                    fmt_float(z.im),
                    j.to_string(),
                    fmt_float(q.value.re),
                    fmt_float(q.value.im),
                    fmt_float(q.est_error),
                ]);
                max_err = max_err.max(q.est_error);
            }
        }
        let report = system_header("resum", file)
            .field(
                "options",
                options_json(
                    vec![
                        ("order", Json::Int(order as i64)),
                        ("tol", Json::Float(tol)),
                        ("theta", Json::Float(theta)),
                        ("grid_points", Json::Int(grid.len() as i64)),
                    ],
                    opts.seed,
                ),
            )
            .field("max_est_error", Json::Float(max_err))
            .build();
        let summary = format!(
            "Laplace sums of {} along theta = {theta:.6} at {} points; \
             max quadrature error {max_err:.3e}\n",
            file.label(),
            grid.len()
        );
        return Ok(RunOutput {
            report,
            summary,
            csvs: vec![("sums.csv".to_owned(), csv.render())],
        });
    }

    // No direction given: lateral sums around the first singular direction.
    if rs.directions().entries.is_empty() {
        return Err(CliError::validation(
            "system has no singular directions; pass --theta to pick a ray",
        ));
    }
    let theta_star = rs.directions().entries[0].theta;
    let rows: Vec<_> = grid
        .par_iter()
        .map(|&x| rs.lateral_sums(0, C64::from(x)).map(|s| (x, s)))
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;

    let columns = [
        "z_re", "z_im", "component", "value_re", "value_im", "est_error",
    ];
    let mut plus_csv = Csv::new(&columns);
    let mut minus_csv = Csv::new(&columns);
    let mut jumps = Vec::with_capacity(rows.len());
    let mut max_err = 0.0_f64;
    let mut max_jump = 0.0_f64;
    for (x, sums) in &rows {
        for j in 0..sums.plus.len() {
            plus_csv.row(vec![
                fmt_float(*x),
                fmt_float(0.0),
                j.to_string(),
                fmt_float(sums.plus[j].re),
                fmt_float(sums.plus[j].im),
                fmt_float(sums.est_error),
            ]);
            minus_csv.row(vec![
                fmt_float(*x),
                fmt_float(0.0),
                j.to_string(),
                fmt_float(sums.minus[j].re),
                fmt_float(sums.minus[j].im),
                fmt_float(sums.est_error),
            ]);
        }
        let jump = sums.jump();
        let magnitude = jump.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        max_err = max_err.max(sums.est_error);
        max_jump = max_jump.max(magnitude);
        jumps.push(
            Json::object()
                .field("z", Json::complex(C64::from(*x)))
                .field(
                    "jump",
                    Json::Array(jump.iter().map(|&c| Json::complex(c)).collect()),
                )
                .field("magnitude", Json::Float(magnitude))
                .build(),
        );
    }

    let report = system_header("resum", file)
        .field(
            "options",
            options_json(
                vec![
                    ("order", Json::Int(order as i64)),
                    ("tol", Json::Float(tol)),
                    ("theta", Json::Null),
                    ("grid_points", Json::Int(grid.len() as i64)),
                ],
                opts.seed,
            ),
        )
        .field("direction", Json::Float(theta_star))
        .field("jumps", Json::Array(jumps))
        .field("max_est_error", Json::Float(max_err))
        .build();
    let summary = format!(
        "lateral sums of {} around theta* = {theta_star:.6} at {} points; \
         max |jump| {max_jump:.3e}, max quadrature error {max_err:.3e}\n",
        file.label(),
        grid.len()
    );
    Ok(RunOutput {
        report,
        summary,
        csvs: vec![
            ("lateral_plus.csv".to_owned(), plus_csv.render()),
            ("lateral_minus.csv".to_owned(), minus_csv.render()),
        ],
    })
}

fn stokes_reports(
    file: &SystemFile,
    order: usize,
    tol: f64,
) -> CliResult<(Vec<StokesReport>, stokeslab_core::odesys::Spectrum)> {
    let sys = file.to_c64()?;
    let (rs, spectrum, _) = build_resummer(&sys, order, tol)?;
    let count = rs.directions().entries.len();
    let reports: Vec<StokesReport> = (0..count)
        .into_par_iter()
        .map(|idx| measure_direction(&rs, &spectrum, idx, None))
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;
    Ok((reports, spectrum))
}

fn stokes_report_json(report: &StokesReport) -> Json {
    Json::object()
        .field("dir_index", Json::Int(report.dir_index as i64))
        .field("theta", Json::Float(report.direction.theta))
        .field("eigen_index", Json::Int(report.direction.eigen_index as i64))
        .field("sheet", Json::Int(report.direction.sheet as i64))
        .field("lambda", Json::complex(report.lambda))
        .field(
            "decay",
            Json::object()
                .field("rate", Json::Float(report.decay.rate))
                .field("power", Json::Float(report.decay.power))
                .field("alpha", Json::Float(report.decay.alpha))
                .field("offset", Json::Float(report.decay.offset))
                .field("residual_rms", Json::Float(report.decay.residual_rms))
                .build(),
        )
        .field(
            "multiplier",
            Json::object()
                .field("gamma", Json::complex(report.multiplier.gamma))
                .field("dispersion", Json::Float(report.multiplier.dispersion))
                .build(),
        )
        .field("threshold", Json::Float(report.threshold))
        .field("rate_matches", Json::Bool(report.rate_matches))
        .field("significant", Json::Bool(report.significant))
        .field(
            "samples",
            Json::Array(
                report
                    .samples
                    .iter()
                    .map(|s| {
                        Json::object()
                            .field("z", Json::complex(s.z))
                            .field("magnitude", Json::Float(s.magnitude()))
                            .field("est_error", Json::Float(s.est_error))
                            .build()
                    })
                    .collect(),
            ),
        )
        .build()
}

pub fn stokes(file: &SystemFile, opts: &OptionSet) -> CliResult<RunOutput> {
    let order = opts.order_or(32, 256)?;
    let tol = opts.tol_or(1e-10)?;
    let (reports, _) = stokes_reports(file, order, tol)?;

    let mut csv = Csv::new(&["dir_index", "theta", "z_abs", "magnitude", "est_error"]);
    let mut summary = format!("Stokes measurement for {}\n", file.label());
    let p = file.p;
    for report in &reports {
        for s in &report.samples {
            csv.row(vec![
                report.dir_index.to_string(),
                fmt_float(report.direction.theta),
                fmt_float(s.z.norm()),
                fmt_float(s.magnitude()),
                fmt_float(s.est_error),
            ]);
        }
        summary.push_str(&format!(
            "direction {} (theta = {:.6}): gamma = {:.6e} {:+.6e}i, \
             rate {:.4} vs |lambda|/p {:.4}, significant = {}\n",
            report.dir_index,
            report.direction.theta,
            report.multiplier.gamma.re,
            report.multiplier.gamma.im,
            report.decay.rate,
            report.lambda.norm() / p as f64,
            report.significant
        ));
    }

    let report_json = system_header("stokes", file)
        .field(
            "options",
            options_json(
                vec![
                    ("order", Json::Int(order as i64)),
                    ("tol", Json::Float(tol)),
                ],
                opts.seed,
            ),
        )
        .field(
            "directions",
            Json::Array(reports.iter().map(stokes_report_json).collect()),
        )
        .build();
    Ok(RunOutput {
        report: report_json,
        summary,
        csvs: vec![("stokes.csv".to_owned(), csv.render())],
    })
}

pub fn sd_check(file: &SystemFile, opts: &OptionSet) -> CliResult<RunOutput> {
    let order = opts.order_or(32, 256)?;
    let tol = opts.tol_or(1e-10)?;
    let sys = file.to_c64()?;
    let (rs, spectrum, _) = build_resummer(&sys, order, tol)?;
    let count = rs.directions().entries.len();
    let reports: Vec<StokesReport> = (0..count)
        .into_par_iter()
        .map(|idx| measure_direction(&rs, &spectrum, idx, None))
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;
    let check = check_sd(&reports, &spectrum, rs.directions())?;

    let evidence: Vec<Json> = check
        .evidence
        .iter()
        .map(|e| {
            Json::object()
                .field("eigen_index", Json::Int(e.eigen_index as i64))
                .field(
                    "lambda",
                    Json::complex(spectrum.eigenvalues[e.eigen_index]),
                )
                .field(
                    "witness",
                    match e.witness {
                        Some(w) => Json::Int(w as i64),
                        None => Json::Null,
                    },
                )
                .field("gamma", Json::complex(e.gamma))
                .field("ratio", Json::Float(e.ratio))
                .build()
        })
        .collect();

    let report = system_header("sd-check", file)
        .field(
            "options",
            options_json(
                vec![
                    ("order", Json::Int(order as i64)),
                    ("tol", Json::Float(tol)),
                ],
                opts.seed,
            ),
        )
        .field("holds", Json::Bool(check.holds))
        .field("evidence", Json::Array(evidence))
        .field(
            "directions",
            Json::Array(reports.iter().map(stokes_report_json).collect()),
        )
        .build();

    let mut summary = format!(
        "SD check for {}: holds = {}\n",
        file.label(),
        check.holds
    );
    for e in &check.evidence {
        summary.push_str(&format!(
            "eigenvalue {}: witness = {}, |gamma| = {:.6e}, ratio = {:.3}\n",
            e.eigen_index,
            match e.witness {
                Some(w) => w.to_string(),
                None => "none".to_owned(),
            },
            e.gamma.norm(),
            e.ratio
        ));
    }
    Ok(RunOutput { report, summary, csvs: Vec::new() })
}

pub fn trajectory(file: &SystemFile, opts: &OptionSet) -> CliResult<RunOutput> {
    let tol = opts.tol_or(1e-10)?;
    let grid = opts.grid_or(0.02, 0.3, 120)?;
    let sys = file.to_c64()?;
    let seed_order = match opts.order {
        Some(_) => opts.order_or(1, 64)?,
        None => dynamics::default_seed_order(grid[0]),
    };
    let hhat = sys.formal_solution(seed_order.max(12))?;
    let traj = seeded_trajectory(&sys, &hhat, &grid, seed_order, tol)?;

    let mut csv_header: Vec<String> = vec!["x".to_owned()];
    for j in 0..sys.dim() {
        csv_header.push(format!("y{j}_re"));
        csv_header.push(format!("y{j}_im"));
    }
    csv_header.push("step".to_owned());
    let header_refs: Vec<&str> = csv_header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for (i, (&x, values)) in traj.xs().iter().zip(traj.values()).enumerate() {
        let mut row = vec![fmt_float(x)];
        for v in values {
            row.push(fmt_float(v.re));
            row.push(fmt_float(v.im));
        }
        let step = if i + 1 < traj.len() {
            x - traj.xs()[i + 1]
        } else {
            0.0
        };
        row.push(fmt_float(step));
        csv.row(row);
    }

    let n_max = 10.min(hhat.order().saturating_sub(1));
    let remainder = dynamics::remainder_check(&traj, &hhat, n_max);
    let zero_counts: Vec<usize> = (0..sys.dim())
        .map(|j| {
            let re: Vec<f64> = traj.values().iter().map(|v| v[j].re).collect();
            dynamics::zero_count(&re)
        })
        .collect();
    let winding = if sys.dim() == 2 {
        let samples: Vec<C64> = traj
            .values()
            .iter()
            .map(|v| C64::new(v[0].re, v[1].re))
            .collect();
        dynamics::winding(&samples).ok()
    } else {
        None
    };

    let report = system_header("trajectory", file)
        .field(
            "options",
            options_json(
                vec![
                    ("seed_order", Json::Int(seed_order as i64)),
                    ("tol", Json::Float(tol)),
                    ("grid_min", Json::Float(*grid.last().unwrap())),
                    ("grid_max", Json::Float(grid[0])),
                    ("grid_points", Json::Int(grid.len() as i64)),
                ],
                opts.seed,
            ),
        )
        .field(
            "stats",
            Json::object()
                .field("steps", Json::Int(traj.stats.steps as i64))
                .field("rejected", Json::Int(traj.stats.rejected as i64))
                .build(),
        )
        .field(
            "remainder_constants",
            Json::Array(remainder.iter().map(|&c| Json::Float(c)).collect()),
        )
        .field(
            "zero_counts",
            Json::Array(zero_counts.iter().map(|&z| Json::Int(z as i64)).collect()),
        )
        .field(
            "winding",
            match winding {
                Some(w) => Json::Float(w),
                None => Json::Null,
            },
        )
        .build();

    let mut summary = format!(
        "trajectory of {} from {:.4} down to {:.4} ({} nodes, tol {tol:.1e}); \
         {} steps, {} rejected\n",
        file.label(),
        grid[0],
        grid.last().unwrap(),
        grid.len(),
        traj.stats.steps,
        traj.stats.rejected
    );
    summary.push_str(&format!(
        "remainder constants C_0..C_{n_max}: {}\n",
        remainder
            .iter()
            .map(|c| format!("{c:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    if let Some(w) = winding {
        summary.push_str(&format!("winding of (y0, y1): {w:.4} turns\n"));
    }

    Ok(RunOutput {
        report,
        summary,
        csvs: vec![("trajectory.csv".to_owned(), csv.render())],
    })
}

pub fn probe(
    sys_file: &SystemFile,
    spec_file: &ProbeSpecFile,
    spec_origin: &str,
    opts: &OptionSet,
) -> CliResult<RunOutput> {
    match spec_file.mode(spec_origin)? {
        ProbeMode::Sat => probe_sat(sys_file, spec_file, spec_origin, opts),
        ProbeMode::Sqa => probe_sqa(sys_file, spec_file, spec_origin, opts),
    }
}

fn probe_sat(
    sys_file: &SystemFile,
    spec_file: &ProbeSpecFile,
    spec_origin: &str,
    opts: &OptionSet,
) -> CliResult<RunOutput> {
    let order = opts.order_or(40, 100)?;
    let sys = sys_file.to_rational()?;
    let spec = spec_file.to_spec(sys_file.r, spec_origin)?;
    let report = probes::sat_probe(&spec, &sys, order)?;

    let json = system_header("probe", sys_file)
        .field(
            "options",
            options_json(vec![("order", Json::Int(order as i64))], opts.seed),
        )
        .field("mode", Json::str("SAT"))
        .field("checked_order", Json::Int(report.checked_order as i64))
        .field("vanishes", Json::Bool(report.vanishes))
        .field(
            "first_nonzero_order",
            match report.first_nonzero_order {
                Some(n) => Json::Int(n as i64),
                None => Json::Null,
            },
        )
        .field(
            "first_nonzero_coeff",
            match &report.first_nonzero_coeff {
                Some(c) => Json::complex(c.to_c64()),
                None => Json::Null,
            },
        )
        .build();

    let summary = match report.first_nonzero_order {
        Some(n) => {
            let c = report.first_nonzero_coeff.as_ref().unwrap().to_c64();
            format!(
                "SAT probe on {}: first nonzero coefficient at order {n} \
                 ({:.6e} {:+.6e}i); no vanishing through order {}\n",
                sys_file.label(),
                c.re,
                c.im,
                report.checked_order
            )
        }
        None => format!(
            "SAT probe on {}: composed series vanishes through order {} \
             (f is the zero polynomial, or this contradicts transcendence)\n",
            sys_file.label(),
            report.checked_order
        ),
    };
    Ok(RunOutput { report: json, summary, csvs: Vec::new() })
}

fn probe_sqa(
    sys_file: &SystemFile,
    spec_file: &ProbeSpecFile,
    spec_origin: &str,
    opts: &OptionSet,
) -> CliResult<RunOutput> {
    let tol = opts.tol_or(1e-10)?;
    let grid = opts.grid_or(0.05, 0.3, 120)?;
    let sys = sys_file.to_c64()?;
    let spec = spec_file.to_spec(sys_file.r, spec_origin)?;
    let seed_order = dynamics::default_seed_order(grid[0]);
    let hhat = sys.formal_solution(seed_order.max(spec.k()).max(12))?;
    let traj = seeded_trajectory(&sys, &hhat, &grid, seed_order, tol)?;
    let report = probes::sqa_probe(&spec, &sys, &hhat, &traj, None)?;

    let mut csv = Csv::new(&["x", "value_re", "value_im", "est_error"]);
    for s in &report.samples {
        csv.row(vec![
            fmt_float(s.x),
            fmt_float(s.value.re),
            fmt_float(s.value.im),
            fmt_float(s.est_error),
        ]);
    }

    let flat = match &report.flat_fit {
        Some(fit) => Json::object()
            .field("order", Json::Float(fit.order))
            .field("rate", Json::Float(fit.rate))
            .field("offset", Json::Float(fit.offset))
            .field("residual_rms", Json::Float(fit.residual_rms))
            .build(),
        None => Json::Null,
    };
    let json = system_header("probe", sys_file)
        .field(
            "options",
            options_json(
                vec![
                    ("tol", Json::Float(tol)),
                    ("grid_min", Json::Float(*grid.last().unwrap())),
                    ("grid_max", Json::Float(grid[0])),
                    ("grid_points", Json::Int(grid.len() as i64)),
                ],
                opts.seed,
            ),
        )
        .field("mode", Json::str("SQA"))
        .field("sample_count", Json::Int(report.samples.len() as i64))
        .field("zero_count", Json::Int(report.zero_count as i64))
        .field("flat_fit", flat)
        .build();

    let mut summary = format!(
        "SQA probe on {}: {} samples, {} sign changes\n",
        sys_file.label(),
        report.samples.len(),
        report.zero_count
    );
    match &report.flat_fit {
        Some(fit) => summary.push_str(&format!(
            "near-flat: fitted exp order {:.2}, rate {:.4}\n",
            fit.order, fit.rate
        )),
        None => summary.push_str("not near-flat; no exponential fit attempted\n"),
    }
    Ok(RunOutput {
        report: json,
        summary,
        csvs: vec![("samples.csv".to_owned(), csv.render())],
    })
}
