use super::HarnessError;
use crate::energy::hamiltonian;
use crate::integrator::Trajectory;
use crate::model::{CoordinateSystem, OvflField};

fn cumulative(v: &[f64]) -> impl Iterator<Item = f64> + '_ {
    v.iter().scan(0.0, |acc, x| {
        *acc += x;
        Some(*acc)
    })
}

/// Column names for a platoon with `n` followers.
pub fn columns(n: usize) -> Vec<String> {
    let mut c = vec!["t".to_string()];
    for prefix in ["X", "Y", "xi", "zeta"] {
        c.extend((1..=n).map(|i| format!("{prefix}{i}")));
    }
    c.push("H1".into());
    c
}

/// The exported time series: `t, X1..XN, Y1..YN, xi1..xiN, zeta1..zetaN, H1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub followers: usize,
    pub rows: Vec<Vec<f64>>,
}

impl SampleTable {
    pub fn from_trajectory(traj: &Trajectory, field: &OvflField) -> Result<Self, HarnessError> {
        let n = field.params.followers();
        let rows = traj
            .times()
            .iter()
            .zip(traj.states())
            .map(|(&t, s)| {
                let xi: Vec<f64> = (1..=n).map(|i| field.gap(s, i)).collect();
                let zeta: Vec<f64> = (1..=n).map(|i| field.gap_rate(s, i)).collect();
                let (x1, y1) = field.first_pair(s);
                let mut row = Vec::with_capacity(4 * n + 2);
                row.push(t);
                if field.system == CoordinateSystem::Relative {
                    row.extend_from_slice(s);
                } else {
                    row.extend(cumulative(&xi));
                    row.extend(cumulative(&zeta));
                }
                row.extend(&xi);
                row.extend(&zeta);
                row.push(hamiltonian(&field.params, x1, y1).unwrap_or(f64::NAN));
                row
            })
            .collect();
        Ok(Self { followers: n, rows })
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// Flat relative states `[X1..XN, Y1..YN]`.
    pub fn relative_states(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r[1..=2 * self.followers].to_vec()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns(self.followers)).expect("in-memory write");
        for row in &self.rows {
            // 17 significant digits: parses back to the identical double
            w.write_record(row.iter().map(|v| format!("{v:.16e}"))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv(text: &str, followers: usize) -> Result<Self, HarnessError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| HarnessError::Schema(format!("unreadable header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let expected = columns(followers);
        let mut index = Vec::with_capacity(expected.len());
        for name in &expected {
            let pos = header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| HarnessError::Schema(format!("missing column `{name}`")))?;
            index.push(pos);
        }
        if let Some(extra) = header.iter().find(|h| !expected.contains(h)) {
            return Err(HarnessError::Schema(format!("unexpected column `{extra}`")));
        }
        let mut rows = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| HarnessError::Schema(format!("row {}: {e}", k + 1)))?;
            let row = index
                .iter()
                .zip(&expected)
                .map(|(&i, name)| {
                    let cell = rec.get(i).unwrap_or("").trim();
                    cell.parse::<f64>().map_err(|_| {
                        HarnessError::Schema(format!("row {}, column `{name}`: `{cell}` is not a number", k + 1))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(HarnessError::Schema("no data rows".into()));
        }
        Ok(Self { followers, rows })
    }
}
