use std::io::Write;
use std::path::Path;

use cqed_core::dynamics::{default_horizon, uniform_grid, DEFAULT_TRACE_POINTS};
use cqed_core::eigen::{
    eigenfrequencies_closed_form, max_component_deviation, ClosedFormVariant, EigenMethod,
};
use cqed_core::model::FRAME;
use cqed_core::spectra::{
    default_half_window, driven_sweep, integrated_norms, symmetric_grid, ChannelSpectra,
    DEFAULT_SPECTRUM_POINTS,
};
use cqed_core::*;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, GridOverrides, RunConfig, SweepAxis};
use crate::output::{self, JsonComplex};
use crate::CliError;

pub const THREADS_ENV: &str = "CQED_SPECTRA_THREADS";

pub const NORM_TOL: f64 = 1e-6;
pub const CLOSURE_TOL: f64 = 1e-8;
pub const POPULATION_TOL: f64 = 1e-6;
pub const SPECTRUM_L1_TOL: f64 = 1e-3;
pub const ROOT_TOL: f64 = 1e-12;
pub const ENERGY_TOL: f64 = 1e-12;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const DRIVE_POINTS: usize = 1000;

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::TrappedExcitation | SpectrumError::BadGrid => {
                CliError::Validation(e.to_string())
            }
            SpectrumError::Dynamics(d) => d.into(),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::TrappedExcitation => CliError::Validation(e.to_string()),
            DynamicsError::Integration(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TrappedExcitation | OracleError::BadGrid | OracleError::DisjointGrids => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Worker pool bounded by `CQED_SPECTRA_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Validation(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn frequency_grid(p: &SystemParams, grid: &GridOverrides) -> Vec<f64> {
    symmetric_grid(
        grid.window.unwrap_or_else(|| default_half_window(p)),
        grid.points.unwrap_or(DEFAULT_SPECTRUM_POINTS),
    )
}

pub fn time_grid(p: &SystemParams, role: Role, grid: &GridOverrides) -> Result<Vec<f64>, CliError> {
    let horizon = match grid.horizon {
        Some(h) => h,
        None => default_horizon(p, role)?,
    };
    Ok(uniform_grid(
        horizon,
        grid.points.unwrap_or(DEFAULT_TRACE_POINTS),
    ))
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => output::write_file(path, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

pub fn execute(
    config: &RunConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let p = &config.params;
    let out = config.out.as_deref();
    match config.command {
        Command::Spectrum => {
            let grid = frequency_grid(p, &config.grid);
            let s = spectrum_grid(p, config.role, Some(&grid))?;
            if s.window_warning {
                let _ = writeln!(
                    stderr,
                    "warning: window holds only {:.6} (atom) and {:.6} (cavity) of the spectral mass",
                    s.norm_at - s.tail_at,
                    s.norm_cav - s.tail_cav
                );
            }
            emit(out, stdout, &output::spectrum_csv(&s))
        }
        Command::Dynamics => {
            let t = time_grid(p, config.role, &config.grid)?;
            emit(
                out,
                stdout,
                &output::dynamics_csv(&trace_closed_form(p, config.role, &t)),
            )
        }
        Command::Driven => {
            let grid = frequency_grid(p, &config.grid);
            let rows = driven_sweep(p, config.role, &grid, config.drive_amplitude);
            if rows.iter().any(|r| r.saturation_warning) {
                let _ = writeln!(stderr, "warning: drive leaves the low-excitation regime");
            }
            emit(out, stdout, &output::driven_csv(&rows))
        }
        Command::Eigen => {
            let report = EigenReport::new(p);
            let text = if config.json {
                output::json(&report)?
            } else {
                report.text()
            };
            emit(out, stdout, &text)
        }
        Command::Verify => {
            let checks = verify(p, config.role)?;
            let mut failed = 0;
            for c in &checks {
                let _ = writeln!(stdout, "{}", c.line());
                failed += usize::from(!c.pass);
            }
            if failed > 0 {
                return Err(CliError::Numerical(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )));
            }
            Ok(())
        }
        Command::ReproduceFigures => {
            let dir = out.expect("validated");
            let pool = thread_pool()?;
            let files = pool.install(|| reproduce_figures(&config.grid))?;
            write_all(dir, &files)
        }
        Command::Sweep => {
            let dir = out.expect("validated");
            let axis = config.sweep.expect("validated");
            let pool = thread_pool()?;
            let files = pool.install(|| sweep(p, config.role, &axis, &config.grid))?;
            write_all(dir, &files)
        }
    }
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    output::ensure_dir(dir)?;
    for (name, text) in files {
        output::write_file(&dir.join(name), text)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsJson {
    pub gamma: f64,
    pub kappa: f64,
    pub g: f64,
    pub delta: f64,
}

impl From<&SystemParams> for ParamsJson {
    fn from(p: &SystemParams) -> Self {
        Self {
            gamma: p.gamma(),
            kappa: p.kappa(),
            g: p.g(),
            delta: p.delta(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub frame: &'static str,
    pub params: ParamsJson,
    pub lambda_plus: JsonComplex,
    pub lambda_minus: JsonComplex,
    pub mixing_angle: Option<f64>,
    pub regime: RegimeReport,
    /// Largest component deviation of the corrected closed form from the
    /// direct roots; absent when the closed form does not apply.
    pub closed_form_deviation: Option<f64>,
}

impl EigenReport {
    pub fn new(p: &SystemParams) -> Self {
        let e = eigenfrequencies(p);
        let closed = eigenfrequencies_closed_form(p, ClosedFormVariant::Corrected).ok();
        Self {
            frame: FRAME,
            params: p.into(),
            lambda_plus: e.lambda_plus.into(),
            lambda_minus: e.lambda_minus.into(),
            mixing_angle: e.theta,
            regime: classify_regime(p),
            closed_form_deviation: closed.map(|c| max_component_deviation(&c, &e)),
        }
    }

    fn text(&self) -> String {
        let z = |c: JsonComplex| {
            format!(
                "{} {} {}i",
                output::number(c.re),
                if c.im < 0.0 { '-' } else { '+' },
                output::number(c.im.abs())
            )
        };
        format!(
            "frame {}\nlambda_plus {}\nlambda_minus {}\ncoupling {:?}\nquality {:?}\n",
            self.frame,
            z(self.lambda_plus),
            z(self.lambda_minus),
            self.regime.coupling,
            self.regime.quality
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tol: f64) -> Self {
        Self {
            name,
            value,
            tol,
            pass: value <= tol,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.3e} (tolerance {:.0e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tol
        )
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Every closed form against its oracle for one parameter set.
pub fn verify(p: &SystemParams, role: Role) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let esc = escape_probabilities_for(p, role)?;

    let (n_at, n_cav) = integrated_norms(p, role, default_half_window(p))?;
    let mut norm_dev = (n_at - 1.0).abs();
    if p.g() > 0.0 {
        norm_dev = norm_dev.max((n_cav - 1.0).abs());
    }
    checks.push(Check::new("spectrum normalization", norm_dev, NORM_TOL));
    checks.push(Check::new(
        "escape probability closure",
        (esc.p_at + esc.p_cav - 1.0).abs(),
        CLOSURE_TOL,
    ));

    let t = uniform_grid(default_horizon(p, role)?, 1025);
    let cf = trace_closed_form(p, role, &t);
    let lind = lindblad_trace(p, role, &t)?;
    let ode = populations_ode(p, role, &t)?;
    checks.push(Check::new(
        "lindblad populations",
        max_abs_diff(&lind.pop_atom, &cf.pop_atom).max(max_abs_diff(&lind.pop_cav, &cf.pop_cav)),
        POPULATION_TOL,
    ));
    checks.push(Check::new(
        "population equations",
        max_abs_diff(&ode.pop_atom, &cf.pop_atom).max(max_abs_diff(&ode.pop_cav, &cf.pop_cav)),
        POPULATION_TOL,
    ));

    let grid = symmetric_grid(default_half_window(p), DEFAULT_SPECTRUM_POINTS);
    let exact = ChannelSpectra::new(p, role)?;
    let (num_at, num_cav) = numeric_relaxation_spectrum(p, role, &grid, FourierWindow::default())?;
    let exact_at: Vec<f64> = grid.iter().map(|&w| exact.atom(w)).collect();
    let mut l1 = compare_spectra((&num_at).into(), Curve::new(&grid, &exact_at))?.l1;
    if p.g() > 0.0 {
        let exact_cav: Vec<f64> = grid.iter().map(|&w| exact.cavity(w)).collect();
        l1 = l1.max(compare_spectra((&num_cav).into(), Curve::new(&grid, &exact_cav))?.l1);
    }
    checks.push(Check::new(
        "wiener-khinchine spectra (L1)",
        l1,
        SPECTRUM_L1_TOL,
    ));

    let e = eigenfrequencies(p);
    let f = complex_frequencies(p, role);
    let scale = p.gamma().max(p.kappa()).max(p.g()).max(p.delta().abs());
    let sum = (e.lambda_plus + e.lambda_minus - f.first - f.second).norm() / scale;
    let product = (e.lambda_plus * e.lambda_minus - (f.first * f.second - p.g() * p.g())).norm()
        / (scale * scale);
    checks.push(Check::new(
        "eigenfrequency sum and product",
        sum.max(product),
        ROOT_TOL,
    ));
    if let Ok(c) = eigenfrequencies_closed_form(p, ClosedFormVariant::Corrected) {
        debug_assert_eq!(c.method, EigenMethod::ClosedFormCorrected);
        checks.push(Check::new(
            "closed-form eigenfrequencies",
            max_component_deviation(&c, &e) / scale,
            ROOT_TOL,
        ));
    }

    let drive = symmetric_grid(default_half_window(p), DRIVE_POINTS);
    let worst = driven_sweep(p, role, &drive, crate::config::DEFAULT_DRIVE_AMPLITUDE)
        .iter()
        .map(|r| r.residual.abs() / r.power_absorbed.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    checks.push(Check::new("driven energy balance", worst, ENERGY_TOL));

    let swapped = role_exchange(&Scenario::new(*p, role));
    let other = ChannelSpectra::new(&swapped.params, swapped.role)?;
    let sym = grid
        .iter()
        .step_by(16)
        .map(|&w| {
            let a = (exact.atom(w) - other.cavity(w)).abs() / exact.atom(w).max(f64::MIN_POSITIVE);
            let c = if p.g() > 0.0 {
                (exact.cavity(w) - other.atom(w)).abs() / exact.cavity(w).max(f64::MIN_POSITIVE)
            } else {
                0.0
            };
            a.max(c)
        })
        .fold(0.0, f64::max);
    checks.push(Check::new("role exchange", sym, SYMMETRY_TOL));
    Ok(checks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelKind {
    Spectrum,
    Dynamics,
}

/// One figure panel dataset.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub figure: u8,
    pub panel: char,
    pub kind: PanelKind,
    pub params: SystemParams,
    pub description: &'static str,
}

impl Panel {
    pub fn file_name(&self) -> String {
        format!("fig{}{}.csv", self.figure, self.panel)
    }
}

/// `fig3*`: good emitter (γ=0.05, g=1) with κ=5 (weak) or 0.25 (strong).
/// `fig4*`: good cavity (κ=0.05, g=1) with γ=5 (weak) or 0.25 (strong).
/// Panels d–f repeat a–c at δ=10. Both spectral channels of one coupling
/// strength share a file, so a plotted panel `a` takes the `s_at` column
/// of files `a` and `b`.
pub fn figure_panels() -> Vec<Panel> {
    let mut panels = Vec::with_capacity(12);
    for figure in [3u8, 4] {
        let make = |broad: f64, delta: f64| {
            let (gamma, kappa) = if figure == 3 {
                (0.05, broad)
            } else {
                (broad, 0.05)
            };
            SystemParams::new(gamma, kappa, 1.0, delta).expect("figure parameters are valid")
        };
        let layout: [(char, PanelKind, f64, f64, &'static str); 6] = [
            (
                'a',
                PanelKind::Spectrum,
                5.0,
                0.0,
                "resonant spectra, weak coupling",
            ),
            (
                'b',
                PanelKind::Spectrum,
                0.25,
                0.0,
                "resonant spectra, strong coupling",
            ),
            (
                'c',
                PanelKind::Dynamics,
                5.0,
                0.0,
                "resonant populations, weak coupling",
            ),
            (
                'd',
                PanelKind::Spectrum,
                5.0,
                10.0,
                "detuned spectra, weak coupling",
            ),
            (
                'e',
                PanelKind::Spectrum,
                0.25,
                10.0,
                "detuned spectra, strong coupling",
            ),
            (
                'f',
                PanelKind::Dynamics,
                5.0,
                10.0,
                "detuned populations, weak coupling",
            ),
        ];
        for (panel, kind, broad, delta, description) in layout {
            panels.push(Panel {
                figure,
                panel,
                kind,
                params: make(broad, delta),
                description,
            });
        }
    }
    panels
}

#[derive(Debug, Clone, Serialize)]
struct DatasetEntry {
    file: String,
    figure: u8,
    panel: char,
    kind: PanelKind,
    description: &'static str,
    role: Role,
    params: ParamsJson,
    regime: RegimeReport,
    lambda_plus: JsonComplex,
    lambda_minus: JsonComplex,
    p_at: f64,
    p_cav: f64,
    rows: usize,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest {
    frame: &'static str,
    convention: String,
    datasets: Vec<DatasetEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// The twelve CSV datasets plus the manifest, as `(file name, contents)`.
pub fn reproduce_figures(grid: &GridOverrides) -> Result<Vec<(String, String)>, CliError> {
    let role = Role::AtomicType;
    let rendered: Vec<(String, String, DatasetEntry)> = figure_panels()
        .par_iter()
        .map(|panel| -> Result<_, CliError> {
            let p = &panel.params;
            let (csv, rows) = match panel.kind {
                PanelKind::Spectrum => {
                    let s = spectrum_grid(p, role, Some(&frequency_grid(p, grid)))?;
                    (output::spectrum_csv(&s), s.omega.len())
                }
                PanelKind::Dynamics => {
                    let t = time_grid(p, role, grid)?;
                    (
                        output::dynamics_csv(&trace_closed_form(p, role, &t)),
                        t.len(),
                    )
                }
            };
            let e = eigenfrequencies(p);
            let esc = escape_probabilities_for(p, role)?;
            let entry = DatasetEntry {
                file: panel.file_name(),
                figure: panel.figure,
                panel: panel.panel,
                kind: panel.kind,
                description: panel.description,
                role,
                params: p.into(),
                regime: classify_regime(p),
                lambda_plus: e.lambda_plus.into(),
                lambda_minus: e.lambda_minus.into(),
                p_at: esc.p_at,
                p_cav: esc.p_cav,
                rows,
            };
            Ok((panel.file_name(), csv, entry))
        })
        .collect::<Result<_, _>>()?;
    let mut files = Vec::with_capacity(rendered.len() + 1);
    let mut datasets = Vec::with_capacity(rendered.len());
    for (name, csv, entry) in rendered {
        files.push((name, csv));
        datasets.push(entry);
    }
    let manifest = Manifest {
        frame: FRAME,
        convention: format!("frame={FRAME}"),
        datasets,
    };
    files.push((MANIFEST_NAME.to_string(), output::json(&manifest)?));
    Ok(files)
}

pub const SWEEP_SUMMARY: &str = "sweep.csv";

/// Spectra on a shared grid for each value of the sweep axis, plus a summary.
pub fn sweep(
    base: &SystemParams,
    role: Role,
    axis: &SweepAxis,
    grid: &GridOverrides,
) -> Result<Vec<(String, String)>, CliError> {
    let points: Vec<SystemParams> = axis
        .values()
        .iter()
        .map(|&v| axis.axis.apply(base, v))
        .collect::<Result<_, _>>()?;
    let half_width = grid
        .window
        .unwrap_or_else(|| points.iter().map(default_half_window).fold(0.0, f64::max));
    let omega = symmetric_grid(half_width, grid.points.unwrap_or(DEFAULT_SPECTRUM_POINTS));
    let results: Vec<(Spectrum, EigenResult)> = points
        .par_iter()
        .map(|p| Ok((spectrum_grid(p, role, Some(&omega))?, eigenfrequencies(p))))
        .collect::<Result<_, CliError>>()?;

    let width = (axis.count - 1).to_string().len().max(3);
    let mut files = Vec::with_capacity(axis.count + 1);
    let mut summary = Vec::with_capacity(axis.count);
    for (k, ((s, e), p)) in results.iter().zip(&points).enumerate() {
        files.push((format!("spectrum_{k:0width$}.csv"), output::spectrum_csv(s)));
        summary.push((
            k,
            vec![
                axis.values()[k],
                p.gamma(),
                p.kappa(),
                p.g(),
                p.delta(),
                e.lambda_plus.re,
                e.lambda_plus.im,
                e.lambda_minus.re,
                e.lambda_minus.im,
                s.channel_probs.p_at,
                s.channel_probs.p_cav,
            ],
        ));
    }
    let header = format!(
        "index,sweep_{},gamma,kappa,g,delta,lambda_plus_re,lambda_plus_im,lambda_minus_re,lambda_minus_im,p_at,p_cav",
        axis.axis.name()
    );
    files.push((
        SWEEP_SUMMARY.to_string(),
        output::summary_csv(&header, &summary),
    ));
    Ok(files)
}
