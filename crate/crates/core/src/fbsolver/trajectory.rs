use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header of the trajectory CSV.
pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "g", "h", "gprime", "hprime", "sup_u"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub gprime: f64,
    pub hprime: f64,
    pub sup_u: f64,
}

impl TrajectoryRow {
    pub fn length(&self) -> f64 {
        self.h - self.g
    }
}

/// Solution on the reference grid `y_j = j / n` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub w: Vec<f64>,
}

impl Snapshot {
    pub fn n_cells(&self) -> usize {
        self.w.len() - 1
    }

    /// Physical position of node `j`.
    pub fn x(&self, j: usize) -> f64 {
        self.g + (self.h - self.g) * j as f64 / self.n_cells() as f64
    }

    /// `u(t, x)` by linear interpolation, zero outside `(g, h)`.
    pub fn value_at(&self, x: f64) -> f64 {
        if x <= self.g || x >= self.h {
            return 0.0;
        }
        let n = self.n_cells();
        let s = (x - self.g) / (self.h - self.g) * n as f64;
        let j = (s.floor() as usize).min(n - 1);
        let frac = s - j as f64;
        self.w[j] * (1.0 - frac) + self.w[j + 1] * frac
    }

    pub fn sup(&self) -> f64 {
        self.w.iter().copied().fold(0.0, f64::max)
    }
}

/// Time series of the fronts plus stored snapshots.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn first(&self) -> Option<&TrajectoryRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// Time covered by the rows.
    pub fn duration(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Rows with `t_lo <= t <= t_hi`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> &[TrajectoryRow] {
        let start = self.rows.partition_point(|r| r.t < t_lo);
        let end = self.rows.partition_point(|r| r.t <= t_hi);
        &self.rows[start..end]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(TRAJECTORY_HEADER)?;
        for r in &self.rows {
            wtr.write_record([r.t, r.g, r.h, r.gprime, r.hprime, r.sup_u].map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
            return Err(Error::Config(format!(
                "{} does not have the trajectory header {}",
                path.display(),
                TRAJECTORY_HEADER.join(",")
            )));
        }
        rdr.deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(Error::from)
    }

    /// `t,g,h,w_0,...,w_n`; all snapshots must share one grid size.
    pub fn write_snapshots_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let n = self.snapshots.first().map_or(0, Snapshot::n_cells);
        let mut header = String::from("t,g,h");
        for j in 0..=n {
            header.push_str(&format!(",w_{j}"));
        }
        writeln!(file, "{header}")?;
        for s in &self.snapshots {
            if s.n_cells() != n {
                return Err(Error::Io("snapshots have different grid sizes".into()));
            }
            let mut line = format!("{},{},{}", s.t, s.g, s.h);
            for v in &s.w {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(file, "{line}")?;
        }
        file.flush()?;
        Ok(())
    }

    pub fn read_snapshots_csv(path: &Path) -> Result<Vec<Snapshot>> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Io(e.to_string())))
                .collect::<Result<_>>()?;
            if vals.len() < 5 {
                return Err(Error::Io("snapshot row too short".into()));
            }
            out.push(Snapshot {
                t: vals[0],
                g: vals[1],
                h: vals[2],
                w: vals[3..].to_vec(),
            });
        }
        Ok(out)
    }
}
