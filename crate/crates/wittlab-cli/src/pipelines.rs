//! Pipeline orchestration: critical structure, resonances, spectra, flow,
//! Morse complex, tunneling and triple products, in dependency order.

use crate::config::{Epsilon0Policy, ExperimentConfig, Pipeline, TriplePreset};
use crate::output::{Bundle, Cell, Csv};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use wittlab::critical::{check_smale_transversality, critical_counts, search_critical_points, CriticalPoint};
use wittlab::flow::correlation::{correlation, correlation_limit_prediction, decay_rate_fit, CorrelationOptions};
use wittlab::flow::{basin_masks, OdeOptions};
use wittlab::geometry::vec3::P3;
use wittlab::geometry::{build_mesh, MorseModel, TriMesh};
use wittlab::linalg::eigen::EigenOptions;
use wittlab::morse::{assemble, find_instantons, CochainRealization, MorseComplex, Orientations};
use wittlab::resonance::{global_resonances_merged, ResonanceSet, DEFAULT_ENTRY_LIMIT};
use wittlab::witten::{build_dec, low_spectrum, witten_matrix};
use wittlab::wkb::{
    cup_chain_map_check, default_epsilon0, low_cluster, sphere_triple, torus_triple, torus_triple_ids,
    triple_cup_count, triple_intersection_count, triple_product_witten, tunneling_check, wkb_state, CupIdentityRow,
    TripleProblem, TunnelingReport,
};
use wittlab::Error;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Lib(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(s) => write!(f, "invalid configuration: {s}"),
            RunError::Lib(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Lib(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io(_) => 5,
            RunError::Lib(e) => match e {
                Error::Config(_) | Error::Domain(_) | Error::Mesh(_) | Error::CutoffTooLarge { .. } => 2,
                Error::MorseViolation(_) => 3,
                Error::Transversality(_) => 4,
                Error::Numerical(_)
                | Error::Integration(_)
                | Error::HbarTooSmall { .. }
                | Error::Window(_)
                | Error::FitWindow(_)
                | Error::Conditioning(_) => 5,
            },
        }
    }
}

#[derive(Serialize)]
struct Summary {
    status: String,
    exit_code: i32,
    error: Option<String>,
    pipelines: Vec<&'static str>,
    provenance: BTreeMap<String, String>,
    warning_count: usize,
    warnings: Vec<String>,
    under_resolved_rows: usize,
    version: &'static str,
}

pub struct RunReport {
    pub exit_code: i32,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
    pub error: Option<String>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    model: MorseModel,
    crits: Vec<CriticalPoint>,
    eig: EigenOptions,
    bundle: Bundle,
    warnings: Vec<String>,
    under_resolved_rows: usize,
    resonances: Option<Vec<ResonanceSet>>,
    spectrum: Csv,
    meshes: BTreeMap<u32, TriMesh>,
}

/// Runs the selected pipelines and writes the bundle (partial on failure)
/// plus `summary.json` into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, RunError> {
    cfg.validate().map_err(RunError::Config)?;
    let model = cfg.model.build().map_err(RunError::Config)?;
    let mut ctx = Ctx {
        cfg,
        model,
        crits: Vec::new(),
        eig: EigenOptions { tol: cfg.tolerances.eigen, seed: cfg.seed, ..EigenOptions::default() },
        bundle: Bundle::new(out, &cfg.hash()),
        warnings: Vec::new(),
        under_resolved_rows: 0,
        resonances: None,
        spectrum: Csv::new(&["degree", "hbar", "mesh_level", "j", "lambda", "resolved_flag"]),
        meshes: BTreeMap::new(),
    };
    let result = ctx.execute();
    let (exit_code, error) = match &result {
        Ok(()) => (0, None),
        Err(e) => (e.exit_code(), Some(e.to_string())),
    };
    if let Err(RunError::Io(e)) = result {
        return Err(RunError::Io(e));
    }
    let mut pipelines: Vec<Pipeline> = cfg.pipelines.clone();
    pipelines.sort();
    let summary = Summary {
        status: if exit_code == 0 { "ok".into() } else { "failed".into() },
        exit_code,
        error: error.clone(),
        pipelines: pipelines.iter().map(|p| p.name()).collect(),
        provenance: ctx.bundle.provenance.clone(),
        warning_count: ctx.warnings.len(),
        warnings: ctx.warnings.clone(),
        under_resolved_rows: ctx.under_resolved_rows,
        version: env!("CARGO_PKG_VERSION"),
    };
    ctx.bundle.add_json("summary.json", "summary", &summary);
    ctx.bundle.write_all()?;
    Ok(RunReport { exit_code, warnings: ctx.warnings, files: ctx.bundle.names(), error })
}

impl Ctx<'_> {
    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    fn execute(&mut self) -> Result<(), RunError> {
        let cfg = self.cfg;
        self.critical_structure()?;
        if cfg.wants(Pipeline::Resonances) {
            self.resonances_report()?;
        }
        if cfg.wants(Pipeline::Spectrum) {
            self.spectrum_report()?;
        }
        if cfg.wants(Pipeline::Converge) {
            self.converge_report()?;
        }
        if cfg.wants(Pipeline::Spectrum) || cfg.wants(Pipeline::Converge) {
            let csv = std::mem::replace(&mut self.spectrum, Csv::new(&[]));
            let stage = if cfg.wants(Pipeline::Spectrum) { "witten_dec.spectrum" } else { "witten_dec.converge" };
            self.bundle.add_csv("spectrum.csv", stage, &csv);
        }
        if cfg.wants(Pipeline::Correlations) {
            self.correlation_report()?;
        }
        let needs_complex = cfg.wants(Pipeline::Morse) || cfg.wants(Pipeline::Tunneling);
        let complex = if needs_complex { Some(self.morse_report()?) } else { None };
        if cfg.wants(Pipeline::Tunneling) {
            self.tunneling_report(complex.as_ref().expect("complex"))?;
        }
        if cfg.wants(Pipeline::Fukaya) {
            self.fukaya_report()?;
        }
        if cfg.export.mesh_off {
            let meshes = std::mem::take(&mut self.meshes);
            for (level, mesh) in &meshes {
                let mut body = Vec::new();
                mesh.write_off(&mut body)?;
                // readers expect the OFF keyword on the first line
                let split = body.iter().position(|&b| b == b'\n').map_or(body.len(), |i| i + 1);
                let mut bytes = body[..split].to_vec();
                bytes.extend_from_slice(format!("{}{}\n", crate::output::HASH_PREFIX, self.bundle.hash).as_bytes());
                bytes.extend_from_slice(&body[split..]);
                self.bundle.add_bytes(&format!("mesh_level{level}.off"), "geometry.mesh", bytes);
            }
        }
        Ok(())
    }

    fn mesh(&mut self, level: u32) -> Result<TriMesh, RunError> {
        if !self.meshes.contains_key(&level) {
            let m = build_mesh(&self.model, level)?;
            self.meshes.insert(level, m);
        }
        Ok(self.meshes[&level].clone())
    }

    fn critical_structure(&mut self) -> Result<(), RunError> {
        let search = search_critical_points(&self.model, self.cfg.seed_density)?;
        for w in search.warnings.clone() {
            self.warn(w);
        }
        self.crits = search.points;
        let sphere = self.model.is_sphere();
        let mut csv = Csv::new(&["id", "x", "y", "z", "f_value", "index", "chi_1", "chi_2"]);
        for c in &self.crits {
            csv.push(vec![
                c.id.into(),
                c.position[0].into(),
                c.position[1].into(),
                if sphere { c.position[2].into() } else { Cell::Blank },
                c.f_value.into(),
                c.index_r.into(),
                c.lyapunov[0].into(),
                c.lyapunov[1].into(),
            ]);
        }
        self.bundle.add_csv("critical_points.csv", "critical_structure", &csv);
        Ok(())
    }

    fn resonance_sets(&mut self) -> Result<Vec<ResonanceSet>, RunError> {
        if self.resonances.is_none() {
            let sets = (0..3)
                .map(|k| {
                    global_resonances_merged(
                        &self.crits,
                        k,
                        self.cfg.lambda_cutoff,
                        DEFAULT_ENTRY_LIMIT,
                        self.cfg.tolerances.merge,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            self.resonances = Some(sets);
        }
        Ok(self.resonances.clone().expect("resonances"))
    }

    fn epsilon0(&self) -> Result<[f64; 3], RunError> {
        Ok(match &self.cfg.epsilon0_policy {
            Epsilon0Policy::HalfGap {} => default_epsilon0(&self.crits)?,
            Epsilon0Policy::Fixed { values } => *values,
        })
    }

    fn resonances_report(&mut self) -> Result<(), RunError> {
        let sets = self.resonance_sets()?;
        let mut csv =
            Csv::new(&["degree", "value", "multiplicity", "crit_id", "J_bitmask", "alpha_1", "alpha_2"]);
        #[derive(Serialize)]
        struct Entry {
            value: f64,
            multiplicity: usize,
        }
        #[derive(Serialize)]
        struct Degree {
            degree: usize,
            cutoff_lambda: f64,
            kernel_multiplicity: usize,
            spectral_gap: Option<f64>,
            total_multiplicity: usize,
            entries: Vec<Entry>,
        }
        let mut degrees = Vec::new();
        for set in &sets {
            for e in &set.entries {
                for w in &e.witnesses {
                    csv.push(vec![
                        set.degree_k.into(),
                        e.value.into(),
                        e.multiplicity.into(),
                        w.crit_id.into(),
                        (w.j_mask as i64).into(),
                        (w.alpha[0] as i64).into(),
                        (w.alpha[1] as i64).into(),
                    ]);
                }
            }
            degrees.push(Degree {
                degree: set.degree_k,
                cutoff_lambda: set.cutoff_lambda,
                kernel_multiplicity: set.multiplicity_at(0.0),
                spectral_gap: set.entries.iter().map(|e| e.value).find(|&v| v < -1e-9),
                total_multiplicity: set.total_multiplicity(),
                entries: set.entries.iter().map(|e| Entry { value: e.value, multiplicity: e.multiplicity }).collect(),
            });
        }
        #[derive(Serialize)]
        struct ResSummary {
            critical_counts: [usize; 3],
            merge_tolerance: f64,
            degrees: Vec<Degree>,
        }
        let summary =
            ResSummary { critical_counts: critical_counts(&self.crits), merge_tolerance: self.cfg.tolerances.merge, degrees };
        self.bundle.add_csv("resonances.csv", "resonance_engine", &csv);
        self.bundle.add_json("resonances_summary.json", "resonance_engine", &summary);
        Ok(())
    }

    fn spectrum_report(&mut self) -> Result<(), RunError> {
        let cfg = self.cfg;
        for &level in &cfg.mesh_levels {
            let mesh = self.mesh(level)?;
            let dec = build_dec(&mesh, &self.model)?;
            for (hi, &hbar) in cfg.hbar_grid.iter().enumerate() {
                if hbar < dec.hbar_resolution() {
                    self.warn(format!(
                        "spectrum: hbar {hbar} is below the resolution bound {:.3} of level {level}",
                        dec.hbar_resolution()
                    ));
                }
                for k in 0..3 {
                    let op = witten_matrix(&dec, hbar, k)?;
                    let pairs = low_spectrum(&op, cfg.spectrum.count, &self.eig)?;
                    for (j, (&lam, &res)) in pairs.values.iter().zip(&pairs.residuals).enumerate() {
                        let resolved = !op.under_resolved && res <= 1e-9 * pairs.norm.max(1e-300);
                        if !resolved {
                            self.under_resolved_rows += 1;
                        }
                        self.spectrum.push(vec![
                            k.into(),
                            hbar.into(),
                            (level as usize).into(),
                            (j + 1).into(),
                            lam.into(),
                            (resolved as usize).into(),
                        ]);
                    }
                    if cfg.export.matrices_coo {
                        let mut body = Vec::new();
                        op.matrix.write_coo(&mut body)?;
                        self.bundle.add_text(
                            &format!("witten_level{level}_hbar{hi}_degree{k}.coo"),
                            "witten_dec.witten_matrix",
                            &body,
                        );
                    }
                }
            }
        }
        Ok(())
    }

    fn converge_report(&mut self) -> Result<(), RunError> {
        let cfg = self.cfg;
        let spec = &cfg.converge;
        let k = spec.degree;
        let set = &self.resonance_sets()?[k];
        let mut targets: Vec<f64> = Vec::new();
        for e in &set.entries {
            targets.extend(std::iter::repeat_n(e.value, e.multiplicity));
        }
        let mut csv =
            Csv::new(&["hbar", "mesh_level", "j", "lambda", "target", "deviation", "abs_deviation", "resolved_flag"]);
        let mut errors: Vec<Vec<f64>> = vec![Vec::new(); spec.count];
        for &(hbar, level) in &spec.schedule {
            let mesh = self.mesh(level)?;
            let dec = build_dec(&mesh, &self.model)?;
            let op = witten_matrix(&dec, hbar, k)?;
            let pairs = low_spectrum(&op, spec.count, &self.eig)?;
            if op.under_resolved {
                self.warn(format!(
                    "converge: hbar {hbar} is below the resolution bound {:.3} of level {level}",
                    dec.hbar_resolution()
                ));
            }
            for (j, (&lam, &res)) in pairs.values.iter().zip(&pairs.residuals).enumerate() {
                let resolved = !op.under_resolved && res <= 1e-9 * pairs.norm.max(1e-300);
                if !resolved {
                    self.under_resolved_rows += 1;
                }
                self.spectrum.push(vec![
                    k.into(),
                    hbar.into(),
                    (level as usize).into(),
                    (j + 1).into(),
                    lam.into(),
                    (resolved as usize).into(),
                ]);
                let target = targets.get(j).copied();
                let dev = target.map(|t| -lam - t);
                if let Some(d) = dev {
                    errors[j].push(d.abs());
                }
                csv.push(vec![
                    hbar.into(),
                    (level as usize).into(),
                    (j + 1).into(),
                    lam.into(),
                    target.into(),
                    dev.into(),
                    dev.map(f64::abs).into(),
                    (resolved as usize).into(),
                ]);
            }
        }
        for (j, e) in errors.iter().enumerate() {
            if e.windows(2).any(|w| w[1] > w[0]) {
                self.warn(format!("converge: |deviation| of eigenvalue {} is not monotone along the schedule", j + 1));
            }
        }
        self.bundle.add_csv("convergence.csv", "witten_dec.converge", &csv);
        Ok(())
    }

    fn correlation_report(&mut self) -> Result<(), RunError> {
        let cfg = self.cfg;
        let spec = &cfg.correlation;
        let level = spec.mesh_level.unwrap_or(cfg.mesh_levels[0]);
        let mesh = self.mesh(level)?;
        let [o1, o2] = spec.observables;
        let psi1 = move |p: P3| o1.eval(p);
        let psi2 = move |p: P3| o2.eval(p);
        let n = (spec.t_max / spec.dt).round() as usize;
        let t_grid: Vec<f64> = (0..=n).map(|i| i as f64 * spec.dt).collect();
        let opts = CorrelationOptions {
            ode: OdeOptions { tol: cfg.tolerances.ode, ..OdeOptions::default() },
            cell_tol: cfg.tolerances.quadrature,
            max_depth: spec.max_depth,
        };
        let series = correlation(&self.model, &mesh, &psi1, &psi2, &t_grid, &opts)?;
        if series.unresolved_cells > 0 {
            self.warn(format!("correlation: {} cells reached the depth limit", series.unresolved_cells));
        }
        let basins = basin_masks(&self.model, &mesh, &self.crits)?;
        let limit = correlation_limit_prediction(&self.model, &mesh, &self.crits, &basins, &psi1, &psi2);
        let mut csv = Csv::new(&["t", "C", "residual"]);
        for (t, c) in series.t_grid.iter().zip(&series.values) {
            csv.push(vec![(*t).into(), (*c).into(), (c - limit).into()]);
        }
        self.bundle.add_csv("correlation.csv", "flow_dynamics.correlation", &csv);
        let gap = wittlab::resonance::spectral_gap(&self.crits, 0)?;
        let fit = decay_rate_fit(&series, limit, gap)?;
        #[derive(Serialize)]
        struct Fit {
            limit_prediction: f64,
            fitted_rate: Option<f64>,
            gap_prediction: f64,
            window: Option<(f64, f64)>,
            status: wittlab::flow::correlation::FitStatus,
            relative_deviation: Option<f64>,
            points_used: usize,
            misfit: f64,
            mesh_level: u32,
            quadrature_cells: usize,
            unresolved_cells: usize,
            quadrature_error_estimate: f64,
            basin_unresolved_fraction: f64,
        }
        let report = Fit {
            limit_prediction: limit,
            fitted_rate: fit.fitted_rate,
            gap_prediction: fit.gap_prediction,
            window: fit.window,
            status: fit.status,
            relative_deviation: fit.relative_deviation,
            points_used: fit.points_used,
            misfit: fit.misfit,
            mesh_level: level,
            quadrature_cells: series.cells,
            unresolved_cells: series.unresolved_cells,
            quadrature_error_estimate: series.error_estimate,
            basin_unresolved_fraction: basins.unresolved_fraction,
        };
        self.bundle.add_json("fit.json", "flow_dynamics.decay_rate_fit", &report);
        Ok(())
    }

    fn orientations(&self) -> Orientations {
        match self.cfg.morse.orientation_seed {
            Some(s) => Orientations::random(self.crits.len(), s),
            None => Orientations::canonical(self.crits.len()),
        }
    }

    fn morse_report(&mut self) -> Result<MorseComplex, RunError> {
        let smale = check_smale_transversality(&self.model, &self.crits, self.cfg.tolerances.transversality)?;
        if !smale.ok {
            let list: Vec<String> = smale
                .suspects
                .iter()
                .map(|s| format!("saddle {} / point {}: {} ({:.3e})", s.saddle, s.other, s.reason, s.min_distance))
                .collect();
            return Err(Error::Transversality(list.join("; ")).into());
        }
        let inst = find_instantons(&self.model, &self.crits)?;
        let o = self.orientations();
        let complex = assemble(&self.model, &self.crits, &inst, &o);
        if !complex.cohomology.d2_zero {
            return Err(Error::Numerical("Morse boundary does not square to zero".into()).into());
        }
        if self.cfg.wants(Pipeline::Morse) {
            #[derive(Serialize)]
            struct Inst<'a> {
                from: usize,
                to: usize,
                sign: i8,
                polyline: &'a [P3],
            }
            #[derive(Serialize)]
            struct Crit {
                id: usize,
                index: usize,
                position: P3,
                f_value: f64,
            }
            #[derive(Serialize)]
            struct Report<'a> {
                crits: Vec<Crit>,
                orientations: &'a [i8],
                instantons: Vec<Inst<'a>>,
                by_index: &'a [Vec<usize>; 3],
                n_ab: &'a [Vec<Vec<i64>>],
                betti: &'a [usize],
                torsion: &'a [Vec<i64>],
            }
            let report = Report {
                crits: self
                    .crits
                    .iter()
                    .map(|c| Crit { id: c.id, index: c.index_r, position: c.position, f_value: c.f_value })
                    .collect(),
                orientations: &complex.orientations.signs,
                instantons: complex
                    .instantons
                    .iter()
                    .map(|i| Inst { from: i.from, to: i.to, sign: i.sign, polyline: &i.polyline })
                    .collect(),
                by_index: &complex.by_index,
                n_ab: &complex.boundary,
                betti: &complex.cohomology.betti,
                torsion: &complex.cohomology.torsion,
            };
            self.bundle.add_json("morse.json", "morse_complex", &report);
        }
        Ok(complex)
    }

    fn tunneling_report(&mut self, complex: &MorseComplex) -> Result<(), RunError> {
        let cfg = self.cfg;
        let level = *cfg.mesh_levels.last().expect("levels");
        let mesh = self.mesh(level)?;
        let dec = build_dec(&mesh, &self.model)?;
        let eps = self.epsilon0()?;
        let (model, crits) = (self.model.clone(), self.crits.clone());
        let real = CochainRealization::new(&model, &mesh, &crits)?;
        #[derive(Serialize)]
        struct Run {
            hbar: f64,
            status: String,
            under_resolved: bool,
            reports: Vec<TunnelingReport>,
        }
        let mut runs = Vec::new();
        for &hbar in &cfg.hbar_grid {
            let cluster = match low_cluster(&dec, &crits, hbar, eps, &self.eig) {
                Ok(c) => c,
                Err(Error::Window(msg)) => {
                    self.warn(format!("tunneling at hbar {hbar}: {msg}"));
                    runs.push(Run { hbar, status: format!("window: {msg}"), under_resolved: false, reports: vec![] });
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let states = crits
                .iter()
                .map(|c| wkb_state(&dec, &cluster, &real, &complex.orientations, &crits, c.id))
                .collect::<Result<Vec<_>, _>>()?;
            let reports = crits
                .iter()
                .filter(|c| c.index_r < 2)
                .map(|c| tunneling_check(&dec, &cluster, &crits, complex, &states, c.id))
                .collect::<Result<Vec<_>, _>>()?;
            for r in &reports {
                if r.n_rounded != r.n_reference {
                    self.warn(format!("tunneling at hbar {hbar}: rounded coefficients of {} differ from the complex", r.a));
                }
            }
            runs.push(Run { hbar, status: "ok".into(), under_resolved: cluster.under_resolved, reports });
        }
        #[derive(Serialize)]
        struct Report {
            mesh_level: u32,
            epsilon0: [f64; 3],
            runs: Vec<Run>,
        }
        self.bundle.add_json("tunneling.json", "wkb_quasimodes.tunneling", &Report { mesh_level: level, epsilon0: eps, runs });
        Ok(())
    }

    fn fukaya_report(&mut self) -> Result<(), RunError> {
        let cfg = self.cfg;
        let spec = &cfg.fukaya;
        let problem = match spec.triple {
            TriplePreset::Torus => torus_triple()?,
            TriplePreset::Sphere => sphere_triple()?,
        };
        let ids = match (spec.ids, spec.triple) {
            (Some(ids), _) => ids,
            (None, TriplePreset::Torus) => torus_triple_ids(&problem),
            (None, TriplePreset::Sphere) => first_nonzero_triple(&problem)?,
        };
        for (i, &id) in ids.iter().enumerate() {
            if id >= problem.pairs[i].crits.len() {
                return Err(RunError::Config(format!("fukaya.ids[{i}] = {id} is not a critical point id")));
            }
        }
        let geometric_count = triple_intersection_count(&problem, ids)?;
        let base_model = problem.pairs[0].model.clone();
        let mut cup_counts = Vec::new();
        for &level in &spec.cup_levels {
            let mesh = build_mesh(&base_model, level)?;
            let reals = problem
                .pairs
                .iter()
                .map(|pf| CochainRealization::new(&pf.model, &mesh, &pf.crits))
                .collect::<Result<Vec<_>, _>>()?;
            let c = triple_cup_count([&reals[0], &reals[1], &reals[2]], &problem, ids)?;
            if c != geometric_count as f64 {
                self.warn(format!("fukaya: cup count {c} at level {level} differs from geometric count {geometric_count}"));
            }
            cup_counts.push((level, c));
        }
        let level = spec.mesh_level.unwrap_or(*cfg.mesh_levels.last().expect("levels"));
        let mesh = build_mesh(&base_model, level)?;
        #[derive(Serialize)]
        struct WittenValue {
            hbar: f64,
            status: String,
            scaled_value: Option<f64>,
            raw_value: Option<f64>,
            under_resolved: bool,
        }
        let mut witten_values = Vec::new();
        let mut prefactor_exponents = Vec::new();
        for &hbar in &cfg.hbar_grid {
            prefactor_exponents.push(-problem.critical_value_sum(ids) / hbar);
            match triple_product_witten(&problem, &mesh, ids, hbar, None, &self.eig) {
                Ok(w) => witten_values.push(WittenValue {
                    hbar,
                    status: "ok".into(),
                    scaled_value: Some(w.scaled_value),
                    raw_value: Some(w.raw_value),
                    under_resolved: w.under_resolved,
                }),
                Err(Error::Window(msg)) => {
                    self.warn(format!("fukaya at hbar {hbar}: {msg}"));
                    witten_values.push(WittenValue {
                        hbar,
                        status: format!("window: {msg}"),
                        scaled_value: None,
                        raw_value: None,
                        under_resolved: false,
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }
        let rows = cup_chain_map_check(&problem, |t| triple_intersection_count(&problem, t))?;
        if !rows.iter().all(|r| r.holds) {
            self.warn("fukaya: cup chain-map identity fails".into());
        }
        #[derive(Serialize)]
        struct Report {
            preset: TriplePreset,
            triple: [usize; 3],
            degrees: [usize; 3],
            geometric_count: i64,
            cup_counts: Vec<(u32, f64)>,
            mesh_level: u32,
            witten_values: Vec<WittenValue>,
            prefactor_exponents: Vec<f64>,
            cup_identity_holds: bool,
            cup_identity: Vec<CupIdentityRow>,
        }
        let report = Report {
            preset: spec.triple,
            triple: ids,
            degrees: problem.degrees(ids),
            geometric_count,
            cup_counts,
            mesh_level: level,
            witten_values,
            prefactor_exponents,
            cup_identity_holds: rows.iter().all(|r| r.holds),
            cup_identity: rows,
        };
        self.bundle.add_json("fukaya.json", "wkb_quasimodes.triple_product", &report);
        Ok(())
    }
}

/// Lexicographically first triple with degree sum two and nonzero count.
fn first_nonzero_triple(problem: &TripleProblem) -> Result<[usize; 3], RunError> {
    let n = [0, 1, 2].map(|i| problem.pairs[i].crits.len());
    for a in 0..n[0] {
        for b in 0..n[1] {
            for c in 0..n[2] {
                let ids = [a, b, c];
                if problem.degrees(ids).iter().sum::<usize>() == 2 && triple_intersection_count(problem, ids)? != 0 {
                    return Ok(ids);
                }
            }
        }
    }
    Err(Error::Domain("no triple with nonzero count".into()).into())
}
