//! Legacy-VTK snapshots and CSV time series.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::postprocess::FieldSample;

/// Legacy-VTK structured-points ASCII text for a field sample.
pub fn vtk_text(sample: &FieldSample, title: &str) -> String {
    let (nx, ny) = (sample.nx(), sample.ny());
    let dx = (sample.x[nx - 1] - sample.x[0]) / (nx - 1) as f64;
    let dy = (sample.y[ny - 1] - sample.y[0]) / (ny - 1) as f64;
    let mut s = String::with_capacity(80 * nx * ny);
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} 1");
    let _ = writeln!(s, "ORIGIN {:e} {:e} 0", sample.x[0], sample.y[0]);
    let _ = writeln!(s, "SPACING {dx:e} {dy:e} 1");
    let _ = writeln!(s, "POINT_DATA {}", nx * ny);
    let fields: [(&str, &[f64]); 5] =
        [("c", &sample.c), ("h", &sample.h), ("h_p", &sample.hp), ("grad_c", &sample.grad_c), ("lap_h", &sample.lap_h)];
    for (name, data) in fields {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in data {
            let _ = writeln!(s, "{v:e}");
        }
    }
    s
}

/// Output directory with small helpers that attach paths to I/O errors.
#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }
}

/// CSV text from a header and rows of numbers.
pub fn csv_text<R: AsRef<[f64]>>(header: &[&str], rows: &[R]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.as_ref().iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldSample {
        let z = vec![0.5; 6];
        FieldSample {
            x: vec![0.0, 1.0, 2.0],
            y: vec![0.0, 2.0],
            c: z.clone(),
            h: z.clone(),
            hp: z.clone(),
            grad_c: z.clone(),
            lap_h: z,
        }
    }

    #[test]
    fn vtk_header_and_sizes() {
        let t = vtk_text(&sample(), "t = 1");
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[4], "DIMENSIONS 3 2 1");
        assert_eq!(lines[6], "SPACING 1e0 2e0 1");
        assert_eq!(lines[7], "POINT_DATA 6");
        assert_eq!(t.matches("SCALARS").count(), 5);
        assert_eq!(lines.len(), 8 + 5 * (2 + 6));
    }

    #[test]
    fn csv_round_trip() {
        let t = csv_text(&["t", "x"], &[[0.5, 1.0], [1.0, 2.25]]);
        assert_eq!(t, "t,x\n5e-1,1e0\n1e0,2.25e0\n");
        let parsed: Vec<f64> = t.lines().nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, vec![1.0, 2.25]);
    }

    #[test]
    fn output_dir_reports_path_on_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(&dir.path().join("a/b")).unwrap();
        out.write("x.txt", "hi").unwrap();
        assert_eq!(fs::read_to_string(out.path("x.txt")).unwrap(), "hi");
        let blocker = dir.path().join("file");
        fs::write(&blocker, "").unwrap();
        let err = OutputDir::create(&blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
