use opgrowth::gf::{eigen_correction, gf_corrected, CorrectionOptions, LoSolution};
use opgrowth::master_equation::{build_generator, evolve as integrate, fit_inverse_size, leading_eigenvalues, EvolveOptions};
use opgrowth::observables::ObservableSet;
use opgrowth::trajectory::{run_ensemble, EnsembleConfig, EnsembleEstimate, PauliString, Stepper, MAX_QUBITS};
use opgrowth::{BandedGenerator, ModelParams, TruncatedSeries, WeightDistribution};
use rayon::prelude::*;

use crate::config::{require, Config, GfConfig, Initial, StepperName};
use crate::error::CliError;
use crate::output::{csv, num, Artifact};
use crate::svg::{line_plot, Series};

type Result<T> = std::result::Result<T, CliError>;

/// Files to write plus a short summary for stdout.
#[derive(Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<String>,
}

impl Outcome {
    fn absorb(&mut self, other: Outcome) {
        self.artifacts.extend(other.artifacts);
        self.summary.extend(other.summary);
    }
}

fn collect(parts: Vec<Result<Outcome>>) -> Result<Outcome> {
    let mut out = Outcome::default();
    for p in parts {
        out.absorb(p?);
    }
    Ok(out)
}

/// ODE states on `times`, which need not start at 0.
fn ode_states(gen: &BandedGenerator, b0: &WeightDistribution, times: &[f64]) -> Result<Vec<WeightDistribution>> {
    if times[0] == 0.0 {
        return Ok(integrate(gen, b0, times, EvolveOptions::default())?);
    }
    let mut grid = vec![0.0];
    grid.extend_from_slice(times);
    let mut states = integrate(gen, b0, &grid, EvolveOptions::default())?;
    states.remove(0);
    Ok(states)
}

fn gf_order(cfg: &Config) -> Result<GfConfig> {
    let gf = cfg.gf.clone().unwrap_or_default();
    if gf.order > 2 {
        return Err(CliError::Config(format!("`gf.order` must be 0, 1 or 2, got {}", gf.order)));
    }
    if gf.top < 8 {
        return Err(CliError::Config(format!("`gf.top` must be at least 8, got {}", gf.top)));
    }
    Ok(gf)
}

fn gf_series(params: &ModelParams, b0: &WeightDistribution, t: f64, order: usize, top: i32) -> Result<TruncatedSeries> {
    Ok(gf_corrected(params, b0, t, order, &CorrectionOptions::default(), top)?)
}

/// `c_w = b_w / Σb` for `w = 1..=w_max`.
fn conditional(b: impl Iterator<Item = f64>) -> Vec<f64> {
    let b: Vec<f64> = b.collect();
    let s: f64 = b.iter().sum();
    b.iter().map(|v| v / s).collect()
}

pub fn evolve(cfg: &Config, svg: bool) -> Result<Outcome> {
    let params = cfg.params()?;
    let times = cfg.times()?;
    let gen = build_generator(&params)?;
    let echo = cfg.to_toml();
    let parts = cfg
        .initial_states()?
        .par_iter()
        .map(|init| {
            let states = ode_states(&gen, &init.b, &times)?;
            let obs: Vec<ObservableSet> =
                times.iter().zip(&states).map(|(&t, b)| ObservableSet::from_distribution(t, b, params.qubits)).collect();
            let rows: Vec<String> = obs.iter().map(ObservableSet::csv_row).collect();
            let mut out = Outcome::default();
            out.artifacts.push(Artifact {
                name: format!("evolve_{}.csv", init.label),
                body: csv("evolve", &echo, &[format!("initial: {}", init.label)], ObservableSet::CSV_HEADER, &rows),
            });
            if svg {
                let series = vec![Series { name: "ODE".into(), points: obs.iter().map(|o| (o.t, o.mean_w)).collect() }];
                out.artifacts.push(Artifact {
                    name: format!("evolve_{}.svg", init.label),
                    body: line_plot(&format!("mean weight, {}", init.label), "t", "<w>_c", &series),
                });
            }
            let last = obs.last().unwrap();
            out.summary.push(format!("{}: mean_w(t={}) = {:.6}", init.label, last.t, last.mean_w));
            Ok(out)
        })
        .collect();
    collect(parts)
}

pub fn gf(cfg: &Config, svg: bool) -> Result<Outcome> {
    let params = cfg.params()?;
    let gfc = gf_order(cfg)?;
    let times = cfg.times()?;
    let radius = LoSolution::new(&params)?.radius();
    let echo = cfg.to_toml();
    let inits = cfg.initial_states()?;
    let note = format!("order: {}", gfc.order);
    let parts = inits
        .par_iter()
        .map(|init| {
            let obs = times
                .iter()
                .map(|&t| {
                    let s = gf_series(&params, &init.b, t, gfc.order, gfc.top)?;
                    Ok(ObservableSet::from_series(t, &s, params.qubits, radius)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<String> = obs.iter().map(ObservableSet::csv_row).collect();
            let mut out = Outcome::default();
            out.artifacts.push(Artifact {
                name: format!("gf_{}.csv", init.label),
                body: csv("gf", &echo, &[format!("initial: {}", init.label), note.clone()], ObservableSet::CSV_HEADER, &rows),
            });
            if svg {
                let series = vec![Series {
                    name: format!("order {}", gfc.order),
                    points: obs.iter().map(|o| (o.t, o.mean_w)).collect(),
                }];
                out.artifacts.push(Artifact {
                    name: format!("gf_{}.svg", init.label),
                    body: line_plot(&format!("mean weight, {}", init.label), "t", "<w>_c", &series),
                });
            }
            out.absorb(snapshots("gf", &format!("gf_{}", init.label), &params, init, &gfc, &echo, svg)?);
            Ok(out)
        })
        .collect();
    collect(parts)
}

/// `c_w` at the configured snapshot times from every order up to `gf.order` and from the ODE.
fn snapshots(
    command: &str,
    prefix: &str,
    params: &ModelParams,
    init: &Initial,
    gfc: &GfConfig,
    echo: &str,
    svg: bool,
) -> Result<Outcome> {
    let mut out = Outcome::default();
    if gfc.snapshots.is_empty() {
        return Ok(out);
    }
    let mut times = gfc.snapshots.clone();
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(CliError::Config("`gf.snapshots` must be finite and >= 0".into()));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let gen = build_generator(params)?;
    let ode = ode_states(&gen, &init.b, &times)?;
    let w_max = params.qubits.min(gfc.top as usize);
    for (t, b) in times.iter().zip(&ode) {
        let mut columns = Vec::new();
        for order in 0..=2 {
            if order <= gfc.order {
                let s = gf_series(params, &init.b, *t, order, gfc.top)?;
                columns.push(conditional((1..=w_max as i32).map(|w| s.coeff(w))));
            } else {
                columns.push(vec![f64::NAN; w_max]);
            }
        }
        let exact = conditional(b.values().iter().copied());
        let rows: Vec<String> = (0..w_max)
            .map(|i| {
                let vals: Vec<String> = columns.iter().map(|c| num(c[i])).chain([num(exact[i])]).collect();
                format!("{},{}", i + 1, vals.join(","))
            })
            .collect();
        let tv: Vec<String> = (0..=gfc.order)
            .map(|o| {
                let d = 0.5 * columns[o].iter().zip(&exact).map(|(a, e)| (a - e).abs()).sum::<f64>();
                format!("order {o}: {d:.4}")
            })
            .collect();
        out.summary.push(format!("{prefix} t={t}: total variation vs ODE, {}", tv.join(", ")));
        out.artifacts.push(Artifact {
            name: format!("{prefix}_snapshot_t{t}.csv"),
            body: csv(
                command,
                echo,
                &[format!("initial: {}", init.label), format!("snapshot t: {t}"), format!("total variation vs ODE: {}", tv.join(", "))],
                "w,c_w_order0,c_w_order1,c_w_order2,c_w_ode",
                &rows,
            ),
        });
        if svg {
            let mut series: Vec<Series> = (0..=gfc.order)
                .map(|o| Series {
                    name: format!("order {o}"),
                    points: columns[o].iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect(),
                })
                .collect();
            series.insert(0, Series { name: "ODE".into(), points: exact.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect() });
            let cut = (3 * init.w0.unwrap_or(1) + 30).min(w_max);
            for s in &mut series {
                s.points.truncate(cut);
            }
            out.artifacts.push(Artifact {
                name: format!("{prefix}_snapshot_t{t}.svg"),
                body: line_plot(&format!("c_w at t = {t}, {}", init.label), "w", "c_w", &series),
            });
        }
    }
    Ok(out)
}

/// ODE against every perturbative order up to `gf.order`, as mean weight per time.
pub fn compare(cfg: &Config, svg: bool) -> Result<Outcome> {
    compare_as("compare", "compare", cfg, svg)
}

fn compare_as(command: &str, prefix: &str, cfg: &Config, svg: bool) -> Result<Outcome> {
    let params = cfg.params()?;
    let gfc = gf_order(cfg)?;
    let times = cfg.times()?;
    let gen = build_generator(&params)?;
    let radius = LoSolution::new(&params)?.radius();
    let echo = cfg.to_toml();
    let parts = cfg
        .initial_states()?
        .par_iter()
        .map(|init| {
            let ode = ode_states(&gen, &init.b, &times)?;
            let mut cols: Vec<Vec<f64>> = vec![ode.iter().map(|b| ObservableSet::from_distribution(0.0, b, params.qubits).mean_w).collect()];
            for order in 0..=2 {
                if order > gfc.order {
                    cols.push(vec![f64::NAN; times.len()]);
                    continue;
                }
                let col = times
                    .iter()
                    .map(|&t| {
                        let s = gf_series(&params, &init.b, t, order, gfc.top)?;
                        Ok(ObservableSet::from_series(t, &s, params.qubits, radius)?.mean_w)
                    })
                    .collect::<Result<Vec<_>>>()?;
                cols.push(col);
            }
            let rows: Vec<String> = times
                .iter()
                .enumerate()
                .map(|(i, &t)| std::iter::once(num(t)).chain(cols.iter().map(|c| num(c[i]))).collect::<Vec<_>>().join(","))
                .collect();
            let errs: Vec<String> = (0..=gfc.order)
                .map(|o| {
                    let worst = cols[o + 1].iter().zip(&cols[0]).map(|(g, e)| ((g - e) / e).abs()).fold(0.0, f64::max);
                    format!("order {o}: {:.2}%", 100.0 * worst)
                })
                .collect();
            let mut out = Outcome::default();
            out.summary.push(format!("{prefix} {}: max relative deviation of mean_w, {}", init.label, errs.join(", ")));
            out.artifacts.push(Artifact {
                name: format!("{prefix}_{}.csv", init.label),
                body: csv(
                    command,
                    &echo,
                    &[format!("initial: {}", init.label), format!("max relative deviation: {}", errs.join(", "))],
                    "t,mean_w_ode,mean_w_order0,mean_w_order1,mean_w_order2",
                    &rows,
                ),
            });
            if svg {
                let names = ["ODE", "order 0", "order 1", "order 2"];
                let series: Vec<Series> = cols
                    .iter()
                    .zip(names)
                    .take(gfc.order + 2)
                    .map(|(c, n)| Series { name: n.into(), points: times.iter().copied().zip(c.iter().copied()).collect() })
                    .collect();
                out.artifacts.push(Artifact {
                    name: format!("{prefix}_{}.svg", init.label),
                    body: line_plot(&format!("mean weight, {}", init.label), "t", "<w>_c", &series),
                });
            }
            Ok(out)
        })
        .collect();
    collect(parts)
}

pub fn spectrum(cfg: &Config) -> Result<Outcome> {
    let base = cfg.params()?;
    let sc = require(&cfg.spectrum, "spectrum")?;
    if sc.sizes.len() < 3 {
        return Err(CliError::Config(format!("`spectrum.sizes` needs at least 3 values, got {}", sc.sizes.len())));
    }
    if sc.fit_degree < 2 {
        return Err(CliError::Config("`spectrum.fit_degree` must be at least 2".into()));
    }
    if sc.modes == 0 {
        return Err(CliError::Config("`spectrum.modes` must be at least 1".into()));
    }
    let spectra = sc
        .sizes
        .par_iter()
        .map(|&n| {
            let p = ModelParams::new(n, base.kappa, base.r, base.couplings.clone())?;
            Ok(leading_eigenvalues(&build_generator(&p)?, sc.modes)?)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut eigen_rows = Vec::new();
    for (n, ev) in sc.sizes.iter().zip(&spectra) {
        for (k, z) in ev.iter().enumerate() {
            eigen_rows.push(format!("{n},{},{},{}", k + 1, num(z.re), num(z.im)));
        }
    }
    let formula = |order: usize, k: usize| match eigen_correction(&base, order, k) {
        Ok(v) => Ok(v),
        Err(opgrowth::Error::Unsupported(_)) => Ok(f64::NAN),
        Err(e) => Err(CliError::from(e)),
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for k in 1..=sc.modes {
        let values: Vec<f64> = spectra.iter().map(|ev| ev[k - 1].re).collect();
        let fit = fit_inverse_size(&sc.sizes, &values, sc.fit_degree, None)?;
        let lam0 = -2.0 * k as f64 * (base.total_strength() + base.kappa);
        let (l1, l2) = (formula(1, k)?, formula(2, k)?);
        rows.push(format!(
            "{k},{},{},{},{},{},{},{}",
            num(fit.coeffs[0]),
            num(fit.coeffs[1]),
            num(fit.coeffs[2]),
            num(lam0),
            num(l1),
            num(l2),
            num(fit.max_residual)
        ));
        summary.push(format!(
            "k={k}: fitted 1/N coefficient {:.6} (closed form {l1:.6}), 1/N² coefficient {:.6} (closed form {l2:.6})",
            fit.coeffs[1], fit.coeffs[2]
        ));
    }
    let echo = cfg.to_toml();
    Ok(Outcome {
        artifacts: vec![
            Artifact {
                name: "spectrum.csv".into(),
                body: csv(
                    "spectrum",
                    &echo,
                    &[format!("fit: lambda(N) = sum_j c_j / N^j, j <= {}", sc.fit_degree)],
                    "k,lambda0_fit,lambda1_fit,lambda2_fit,lambda0_formula,lambda1_formula,lambda2_formula,fit_max_residual",
                    &rows,
                ),
            },
            Artifact {
                name: "spectrum_eigenvalues.csv".into(),
                body: csv("spectrum", &echo, &[], "N,k,re,im", &eigen_rows),
            },
        ],
        summary,
    })
}

pub fn mc(cfg: &Config) -> Result<Outcome> {
    let params = cfg.params()?;
    let mcc = require(&cfg.mc, "mc")?;
    let times = cfg.times()?;
    if params.qubits > MAX_QUBITS {
        return Err(CliError::Unsupported(format!("Monte Carlo is limited to {MAX_QUBITS} qubits, got {}", params.qubits)));
    }
    let initial = match &mcc.string {
        Some(label) => {
            if label.chars().count() != params.qubits {
                return Err(CliError::Config(format!("`mc.string` {label:?} does not have {} letters", params.qubits)));
            }
            PauliString::parse(label)?
        }
        None => {
            let inits = cfg.initial_states()?;
            match inits.as_slice() {
                [Initial { w0: Some(w0), .. }] => PauliString { x: (1u32 << w0) - 1, z: 0 },
                _ => return Err(CliError::Config("missing key `mc.string` (or a single `initial.weight`)".into())),
            }
        }
    };
    let ec = EnsembleConfig {
        initial,
        times: times.clone(),
        realizations: mcc.realizations,
        dt: mcc.dt,
        seed: mcc.seed,
        stepper: match mcc.stepper {
            StepperName::Rotations => Stepper::Rotations,
            StepperName::Exact => Stepper::Exact,
        },
    };
    let est = run_ensemble(&params, &ec)?;
    let gen = build_generator(&params)?;
    let reference = ode_states(&gen, &WeightDistribution::delta(initial.weight(), params.qubits)?, &times)?;
    let z = est.max_z_score(&reference)?;
    let pass = z < 3.0;
    let verdict = format!("{}: max |z| = {z:.3} against the ODE over {} times", if pass { "PASS" } else { "FAIL" }, times.len());

    let report_rows = report_rows(&est, &reference);
    let obs_rows: Vec<String> = (0..times.len())
        .map(|i| Ok(ObservableSet::from_distribution(times[i], &est.distribution(i)?, params.qubits).csv_row()))
        .collect::<Result<_>>()?;
    let echo = cfg.to_toml();
    let notes = vec![format!("initial string: {}", initial.label(params.qubits)), verdict.clone()];
    Ok(Outcome {
        artifacts: vec![
            Artifact { name: "mc.csv".into(), body: csv("mc", &echo, &notes, EnsembleEstimate::CSV_HEADER, &est.csv_rows()) },
            Artifact { name: "mc_observables.csv".into(), body: csv("mc", &echo, &notes, ObservableSet::CSV_HEADER, &obs_rows) },
            Artifact { name: "mc_report.csv".into(), body: csv("mc", &echo, &notes, "t,w,b_mc,b_stderr,b_ode,z", &report_rows) },
        ],
        summary: vec![verdict],
    })
}

fn report_rows(est: &EnsembleEstimate, reference: &[WeightDistribution]) -> Vec<String> {
    let mut rows = Vec::new();
    for (i, t) in est.times.iter().enumerate() {
        for w in 1..=est.qubits {
            let (m, s, r) = (est.mean[i][w], est.stderr[i][w], reference[i].get(w));
            let d = m - r;
            let z = if d.abs() < 1e-12 { 0.0 } else { d / s };
            rows.push(format!("{},{w},{},{},{},{}", num(*t), num(m), num(s), num(r), num(z)));
        }
    }
    rows
}

pub const FIGURES: [&str; 3] = ["rho", "cw", "l3"];

/// Built-in config behind each figure.
pub fn figure_config(name: &str) -> Result<Config> {
    let text = match name {
        "rho" => {
            r#"
            [model]
            qubits = 100
            kappa = 0.5
            r = 1.0
            couplings = { a2 = 1.0 }
            [initial]
            weight = [1, 2, 3, 4]
            [time]
            start = 0.0
            stop = 20.0
            count = 81
            [gf]
            order = 2
            "#
        }
        "cw" => {
            r#"
            [model]
            qubits = 100
            kappa = 0.5
            r = 1.0
            couplings = { a2 = 1.0 }
            [initial]
            weight = 3
            [gf]
            order = 2
            snapshots = [2.0, 4.0]
            "#
        }
        "l3" => {
            r#"
            [model]
            qubits = 100
            kappa = 0.5
            r = 1.0
            couplings = { a3 = 1.0 }
            [initial]
            weight = [1, 2]
            [time]
            start = 0.0
            stop = 20.0
            count = 81
            [gf]
            order = 2
            "#
        }
        other => {
            return Err(CliError::Config(format!("unknown figure {other:?}; expected one of {}", FIGURES.join(", "))))
        }
    };
    Ok(toml::from_str(text).expect("built-in figure config parses"))
}

pub fn figures(name: &str, svg: bool) -> Result<Outcome> {
    let cfg = figure_config(name)?;
    let command = format!("figures {name}");
    match name {
        "cw" => {
            let params = cfg.params()?;
            let gfc = gf_order(&cfg)?;
            let echo = cfg.to_toml();
            let parts: Vec<Result<Outcome>> = cfg
                .initial_states()?
                .iter()
                .map(|init| snapshots(&command, &format!("cw_{}", init.label), &params, init, &gfc, &echo, svg))
                .collect();
            collect(parts)
        }
        _ => compare_as(&command, name, &cfg, svg),
    }
}
