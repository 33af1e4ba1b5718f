//! Grid-function file format: a JSON header line with the grid metadata,
//! followed by one `index,re,im` CSV row per cell.

use super::{Grid, GridFunction};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    box_min: Vec<f64>,
    box_max: Vec<f64>,
    resolution: Vec<usize>,
}

impl GridFunction {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        let g = self.grid();
        let header = Header {
            dim: g.dim(),
            box_min: g.box_min().to_vec(),
            box_max: g.box_max().to_vec(),
            resolution: g.resolution().to_vec(),
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for (i, v) in self.values().iter().enumerate() {
            writeln!(w, "{i},{:e},{:e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Format("empty file".into()))??;
        let header: Header = serde_json::from_str(&header_line)?;
        let grid = Grid::new(header.dim, header.box_min, header.box_max, header.resolution)?;
        let n = grid.num_cells();
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        let mut seen = vec![false; n];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let idx: usize = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("bad index in row: {line}")))?;
            let re: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("bad re in row: {line}")))?;
            let im: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("bad im in row: {line}")))?;
            if idx >= n {
                return Err(Error::Format(format!("index {idx} out of range 0..{n}")));
            }
            if seen[idx] {
                return Err(Error::Format(format!("duplicate index {idx}")));
            }
            seen[idx] = true;
            values[idx] = Complex64::new(re, im);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Format(format!("missing row for cell {missing}")));
        }
        GridFunction::from_values(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cube, Generator};

    #[test]
    fn round_trip_preserves_bits() {
        let dir = std::env::temp_dir().join("morrey_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");

        let g = Grid::new_2d([-1.0, -1.0], [1.0, 1.0], [8, 8]).unwrap();
        let f = GridFunction::sample(
            &g,
            &Generator::Indicator {
                cube: Cube::new(vec![0.0, 0.0], 0.5),
            },
        )
        .unwrap();
        f.write_csv(&path).unwrap();
        let f2 = GridFunction::read_csv(&path).unwrap();
        assert_eq!(f, f2);
    }
}
