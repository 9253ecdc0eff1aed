//! Runs one configured experiment and writes its CSV/JSON outputs plus a
//! manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::channel::{reset_channel, superoperator_matrix, KrausSet};
use crate::config::{ExperimentConfig, ModelConfig};
use crate::dynamics::{self, OverlapRecord};
use crate::ep_analysis::{
    self, complex_counts, fit_ep, locate_eps, sweep_spectrum, track_bands, BisectionConfig, EpFitConfig,
    SweepGrid, TrackConfig,
};
use crate::error::{Error, Result};
use crate::hamiltonians::{hermitian_eigensystem, ConstrainedBasis};
use crate::spectra::{self, Spectrum};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisError {
    pub analysis: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub status: String,
    pub outputs: Vec<String>,
    pub runtimes_s: BTreeMap<String, f64>,
    pub errors: Vec<AnalysisError>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunReport {
    /// 0 when every analysis succeeded, 2 after a numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.manifest.errors.is_empty() {
            0
        } else {
            2
        }
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    outputs: Vec<String>,
    channel: Option<KrausSet>,
    spectrum: Option<Spectrum>,
}

impl<'a> Run<'a> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.outputs.push(name.to_string());
        std::fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    fn channel(&mut self) -> Result<&KrausSet> {
        if self.channel.is_none() {
            self.channel = Some(reset_channel(&self.cfg.model(), self.cfg.layout()?, self.cfg.t)?);
        }
        Ok(self.channel.as_ref().unwrap())
    }

    fn spectrum(&mut self) -> Result<&Spectrum> {
        if self.spectrum.is_none() {
            let m = superoperator_matrix(self.channel()?);
            self.spectrum = Some(spectra::full_spectrum(&m)?);
        }
        Ok(self.spectrum.as_ref().unwrap())
    }

    fn bath_dim(&self) -> Result<usize> {
        let layout = self.cfg.layout()?;
        Ok(self.cfg.model().joint_basis(layout)?.bath_count())
    }

    fn spectrum_csv(&mut self) -> Result<()> {
        let nb = self.bath_dim()?;
        self.spectrum()?;
        let w = self.create("spectrum.csv")?;
        spectra::write_spectrum_csv(self.spectrum.as_ref().unwrap(), nb, w)
    }

    fn histogram(&mut self) -> Result<()> {
        let nb = self.bath_dim()?;
        let bins = self.cfg.tolerances.histogram_bins;
        let window = self.cfg.tolerances.cluster_window;
        let s = self.spectrum()?;
        let stats = spectra::magnitude_histogram(s, bins, nb)?;
        let cluster = spectra::minus_one_cluster(s, window)?;
        let radius = s.spectral_radius();
        let rows: Vec<HistogramRow> = stats
            .densities
            .iter()
            .zip(stats.bin_edges.windows(2))
            .map(|(&density, e)| HistogramRow { bin_lo: e[0], bin_hi: e[1], density })
            .collect();
        let w = self.create("histogram.csv")?;
        dynamics::write_csv(&rows, w)?;
        let summary = json!({
            "bath_dim": nb,
            "threshold": stats.threshold,
            "spectral_radius": radius,
            "real_fraction": stats.real_fraction,
            "above_threshold_fraction": stats.above_threshold_fraction,
            "ks_distance": stats.ks_distance,
            "real_outliers": stats.outliers,
            "minus_one_cluster": cluster.iter().map(|c| json!({
                "index": c.index, "re": c.lambda.re, "im": c.lambda.im, "is_real": c.is_real
            })).collect::<Vec<_>>(),
        });
        self.write_json("spectral_stats.json", &summary)
    }

    fn overlaps(&mut self) -> Result<()> {
        let layout = self.cfg.layout()?;
        let model = self.cfg.model();
        let basis = model.joint_basis(layout)?;
        let eig = hermitian_eigensystem(&model.hamiltonian(layout.n_h())?)?;
        let mut rows: Vec<OverlapRecord> = Vec::new();
        if matches!(self.cfg.model, ModelConfig::Pxp(_)) {
            let cb = ConstrainedBasis::new(layout.n_h())?;
            let scan = dynamics::scar_candidates(&eig, &cb, 4)?;
            let states: Vec<_> = scan.scars.iter().map(|s| eig.state(s.index)).collect();
            let s = self.spectrum()?;
            for (mode, m) in s.modes.iter().enumerate() {
                rows.push(OverlapRecord {
                    mode,
                    re: m.lambda.re,
                    im: m.lambda.im,
                    abs: m.magnitude(),
                    xi: dynamics::scar_overlap_avg(m, &states, &basis)?,
                    reference: "scar_avg".into(),
                });
            }
            let w = self.create("scars.csv")?;
            dynamics::write_csv(&scan.scars, w)?;
        } else {
            let refs = [("ground", eig.ground()), ("top", eig.top()), ("median", eig.median())];
            let s = self.spectrum()?;
            for (label, psi) in &refs {
                rows.extend(dynamics::overlaps(s, psi, &basis, label)?);
            }
        }
        let w = self.create("overlaps.csv")?;
        dynamics::write_csv(&rows, w)
    }

    fn ep(&mut self, errors: &mut Vec<AnalysisError>) -> Result<()> {
        let sweep_cfg = self.cfg.sweep.as_ref().ok_or_else(|| Error::Config("sweep section missing".into()))?;
        let tol = self.cfg.tolerances;
        let grid = SweepGrid::new(
            sweep_cfg.parameter.clone(),
            sweep_cfg.values(),
            self.cfg.model(),
            self.cfg.layout()?,
            self.cfg.t,
        )?;
        let sweep = sweep_spectrum(&grid);
        for f in &sweep.failures {
            errors.push(AnalysisError {
                analysis: "ep".into(),
                message: format!("sweep point {} ({}): {}", f.index, f.value, f.message),
            });
        }
        let track = track_bands(&sweep, &TrackConfig::default())?;
        let counts = complex_counts(&track, tol.tol_im_rel);
        let w = self.create("bands.csv")?;
        ep_analysis::write_bands_csv(&track, w)?;
        let w = self.create("complex_count.csv")?;
        ep_analysis::write_complex_count_csv(&counts, w)?;

        let bisect = BisectionConfig { resolution: tol.ep_resolution, max_iter: tol.ep_max_iter, tol_im_rel: tol.tol_im_rel };
        let mut eps = locate_eps(&grid, &track, &bisect)?;
        let fit_cfg = EpFitConfig {
            refine: BisectionConfig { resolution: tol.fit_resolution, ..bisect },
            ..EpFitConfig::default()
        };
        let mut fits = Vec::new();
        for (k, ep) in eps.iter_mut().enumerate().take(tol.fit_count) {
            match fit_ep(&grid, ep, &fit_cfg) {
                Ok((refined, fit)) => {
                    *ep = refined;
                    fits.push((k, fit));
                }
                Err(e) => errors.push(AnalysisError { analysis: "ep".into(), message: format!("fit of EP {k}: {e}") }),
            }
        }
        let w = self.create("eps.csv")?;
        ep_analysis::write_eps_csv(&eps, w)?;
        let w = self.create("ep_fit.csv")?;
        ep_analysis::write_ep_fit_csv(&fits, w)
    }

    fn qmi(&mut self) -> Result<()> {
        let n_k = self.cfg.n_k as usize;
        let traj = dynamics::qmi_trajectory(self.channel()?, n_k)?;
        let w = self.create("qmi.csv")?;
        dynamics::write_csv(&traj, w)?;
        let layout = self.cfg.layout()?;
        for v in &self.cfg.variants {
            let k = reset_channel(&self.cfg.variant_model(v)?, layout, self.cfg.t)?;
            let traj = dynamics::qmi_trajectory(&k, n_k)?;
            let w = self.create(&format!("qmi_{}.csv", sanitize(&v.label)))?;
            dynamics::write_csv(&traj, w)?;
        }
        Ok(())
    }

    fn imbalance(&mut self, errors: &mut Vec<AnalysisError>) -> Result<()> {
        let sweep_cfg = self.cfg.sweep.as_ref().ok_or_else(|| Error::Config("sweep section missing".into()))?;
        let scan = dynamics::phase_scan(
            &self.cfg.model(),
            self.cfg.layout()?,
            self.cfg.t,
            &sweep_cfg.values(),
            self.cfg.n_k as usize,
        );
        for (jz, msg) in &scan.failures {
            errors.push(AnalysisError { analysis: "imbalance".into(), message: format!("J_z = {jz}: {msg}") });
        }
        let w = self.create("phase_scan.csv")?;
        dynamics::write_csv(&scan.rows, w)
    }
}

#[derive(Serialize)]
struct HistogramRow {
    bin_lo: f64,
    bin_hi: f64,
    density: f64,
}

fn sanitize(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_experiment_in(cfg, &cfg.output_dir)
}

/// Runs every enabled analysis. Configuration and I/O problems abort with
/// an error; numerical failures are recorded in the manifest and the
/// remaining analyses still run.
pub fn run_experiment_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut run = Run { cfg, dir, outputs: Vec::new(), channel: None, spectrum: None };
    let mut errors = Vec::new();
    let mut runtimes = BTreeMap::new();
    let a = cfg.analyses;
    let steps: [(&str, bool); 6] = [
        ("spectrum", a.spectrum),
        ("histogram", a.histogram),
        ("overlaps", a.overlaps),
        ("ep", a.ep),
        ("qmi", a.qmi),
        ("imbalance", a.imbalance),
    ];
    for (name, enabled) in steps {
        if !enabled {
            continue;
        }
        let start = Instant::now();
        let result = match name {
            "spectrum" => run.spectrum_csv(),
            "histogram" => run.histogram(),
            "overlaps" => run.overlaps(),
            "ep" => run.ep(&mut errors),
            "qmi" => run.qmi(),
            _ => run.imbalance(&mut errors),
        };
        runtimes.insert(name.to_string(), start.elapsed().as_secs_f64());
        match result {
            Ok(()) => log::info!("{name} done in {:.2} s", start.elapsed().as_secs_f64()),
            Err(e @ (Error::Io(_) | Error::Config(_))) => return Err(e),
            Err(e) => {
                log::error!("{name} failed: {e}");
                errors.push(AnalysisError { analysis: name.into(), message: e.to_string() });
            }
        }
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: cfg.sha256()?,
        config: cfg.clone(),
        status: if errors.is_empty() { "ok".into() } else { "partial".into() },
        outputs: run.outputs.clone(),
        runtimes_s: runtimes,
        errors,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join(MANIFEST), text)?;
    Ok(RunReport { output_dir: dir.to_path_buf(), manifest })
}
