use std::path::Path;

use crate::exit::{CliError, CliResult};

/// 17 significant digits, `.` decimal point.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("creating {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// `dir/stem<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn energy_plot_script(csv: &Path) -> String {
    let name = csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let png = sibling(Path::new(&name), ".png");
    format!(
        "# gnuplot script: energy distributions of the partial-trace and BnS canonical states\n\
         set datafile separator ','\n\
         set terminal pngcairo size 800,500\n\
         set output '{png}'\n\
         set xlabel '|s|'\n\
         set ylabel 'probability'\n\
         set key top right\n\
         plot '{name}' using 1:2 skip 1 with points pt 7 title 'partial trace', \\\n\
         \x20    '{name}' using 1:3 skip 1 with points pt 5 title 'blurred and saturated'\n",
        png = png.display()
    )
}

pub fn bound_plot_script(csv: &Path) -> String {
    let name = csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let png = sibling(Path::new(&name), ".png");
    format!(
        "# gnuplot script: mean distance to the canonical state and entropy bound versus Np\n\
         set datafile separator ','\n\
         set terminal pngcairo size 800,500\n\
         set output '{png}'\n\
         set xlabel 'Np'\n\
         set ylabel 'trace distance'\n\
         set key top right\n\
         plot '{name}' using 1:3:4 skip 1 with yerrorbars pt 7 title 'mean distance', \\\n\
         \x20    '{name}' using 1:5 skip 1 with points pt 6 title 'entropy bound'\n",
        png = png.display()
    )
}
