//! Emits gnuplot scripts next to an experiment's CSV outputs. Each script
//! renders one PNG and reads only files in its own directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const HEADER: &str = "set datafile separator ','\nset key autotitle columnhead\n";

fn terminal(name: &str) -> String {
    format!("set terminal pngcairo size 900,650\nset output '{name}.png'\n")
}

fn spectrum_script() -> String {
    format!(
        "{HEADER}{}set size ratio -1\nset xlabel 'Re lambda'\nset ylabel 'Im lambda'\n\
         set parametric\nset trange [0:2*pi]\n\
         plot cos(t), sin(t) with lines dt 2 lc 'gray' notitle, \\\n     \
         'spectrum.csv' using 2:3 with points pt 7 ps 0.5 title 'eigenvalues'\n",
        terminal("spectrum")
    )
}

fn histogram_script(threshold: Option<f64>) -> String {
    let reference = match threshold {
        Some(r) => format!(
            ", \\\n     (x <= {r} ? 2*x/({r}**2) : 0) with lines dt 2 lw 2 title 'triangular law'"
        ),
        None => String::new(),
    };
    format!(
        "{HEADER}{}set xlabel '|lambda|'\nset ylabel 'probability density'\nset style fill solid 0.5\n\
         plot 'histogram.csv' using (($1+$2)/2):3:($2-$1) with boxes title 'spectrum'{reference}\n",
        terminal("histogram")
    )
}

fn overlaps_script() -> String {
    format!(
        "{HEADER}{}set xlabel '|lambda|'\nset ylabel 'xi'\nset logscale y\n\
         refs = 'ground top median scar_avg'\n\
         plot for [r in refs] 'overlaps.csv' using 4:(strcol(6) eq r ? $5 : 1/0) with points pt 7 ps 0.6 title r\n",
        terminal("overlaps")
    )
}

fn bands_script() -> String {
    format!(
        "{HEADER}{}set multiplot layout 2,1\nset xlabel 'parameter'\n\
         set ylabel 'Im lambda'\nplot 'bands.csv' using 1:4:2 with points pt 7 ps 0.3 lc variable notitle\n\
         set ylabel 'Re lambda'\nplot 'bands.csv' using 1:3:2 with points pt 7 ps 0.3 lc variable notitle\n\
         unset multiplot\n",
        terminal("bands")
    )
}

fn ep_fit_script() -> String {
    format!(
        "{HEADER}{}set logscale xy\nset xlabel '|J - J*|'\nset ylabel '|Im lambda|'\nset format x '10^{{%L}}'\n\
         f(x) = a * x**b\na = 1; b = 0.5\nfit f(x) 'ep_fit.csv' using 2:3 via a, b\n\
         plot 'ep_fit.csv' using 2:3 with points pt 7 title 'splitting', \\\n     \
         f(x) with lines title sprintf('fit, exponent %.3f', b)\n",
        terminal("ep_fit")
    )
}

fn complex_count_script() -> String {
    format!(
        "{HEADER}{}set xlabel 'parameter'\nset ylabel 'complex eigenvalues'\n\
         plot 'complex_count.csv' using 1:2 with steps title 'all', \\\n     \
         'complex_count.csv' using 1:3 with steps title 'tracked bands'\n",
        terminal("complex_count")
    )
}

fn qmi_script(files: &[String]) -> String {
    let plots: Vec<String> =
        files.iter().map(|f| format!("'{f}' using 1:2 with linespoints title '{}'", f.trim_end_matches(".csv"))).collect();
    format!(
        "{HEADER}{}set logscale y\nset xlabel 'n_K'\nset ylabel 'S'\nplot {}\n",
        terminal("qmi"),
        plots.join(", \\\n     ")
    )
}

fn phase_scan_script() -> String {
    format!(
        "{HEADER}{}set multiplot layout 2,1\nset xlabel 'J_z / J_2'\n\
         set ylabel 'S'\nplot 'phase_scan.csv' using 1:2 with linespoints notitle\n\
         set ylabel 'B + 1'\nplot 'phase_scan.csv' using 1:3 with linespoints notitle\n\
         unset multiplot\n",
        terminal("phase_scan")
    )
}

fn read_threshold(dir: &Path) -> Option<f64> {
    let text = std::fs::read_to_string(dir.join("spectral_stats.json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("threshold")?.as_f64()
}

/// Writes one script per recognised CSV family and returns their paths.
/// Rewriting is byte-identical.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut csvs: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csvs.sort();
    let has = |name: &str| csvs.iter().any(|c| c == name);
    let mut scripts: Vec<(&str, String)> = Vec::new();
    if has("spectrum.csv") {
        scripts.push(("spectrum.gp", spectrum_script()));
    }
    if has("histogram.csv") {
        scripts.push(("histogram.gp", histogram_script(read_threshold(dir))));
    }
    if has("overlaps.csv") {
        scripts.push(("overlaps.gp", overlaps_script()));
    }
    if has("bands.csv") {
        scripts.push(("bands.gp", bands_script()));
    }
    if has("ep_fit.csv") {
        scripts.push(("ep_fit.gp", ep_fit_script()));
    }
    if has("complex_count.csv") {
        scripts.push(("complex_count.gp", complex_count_script()));
    }
    let qmi: Vec<String> = csvs.iter().filter(|c| c.starts_with("qmi")).cloned().collect();
    if !qmi.is_empty() {
        scripts.push(("qmi.gp", qmi_script(&qmi)));
    }
    if has("phase_scan.csv") {
        scripts.push(("phase_scan.gp", phase_scan_script()));
    }
    if scripts.is_empty() {
        return Err(Error::MissingOutputs(dir.to_path_buf()));
    }
    let mut written = Vec::new();
    for (name, body) in scripts {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_plots(dir.path()), Err(Error::MissingOutputs(_))));
    }

    #[test]
    fn emission_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["bands.csv", "ep_fit.csv", "complex_count.csv", "qmi.csv", "qmi_mbl.csv"] {
            std::fs::write(dir.path().join(f), "x\n").unwrap();
        }
        let first = emit_plots(dir.path()).unwrap();
        let bytes: Vec<Vec<u8>> = first.iter().map(|p| std::fs::read(p).unwrap()).collect();
        let second = emit_plots(dir.path()).unwrap();
        assert_eq!(first, second);
        for (p, b) in second.iter().zip(&bytes) {
            assert_eq!(&std::fs::read(p).unwrap(), b);
        }
        assert_eq!(first.len(), 4);
        let qmi = std::fs::read_to_string(dir.path().join("qmi.gp")).unwrap();
        assert!(qmi.contains("qmi_mbl.csv"));
    }
}
