//! JSON and CSV writers. Every float is written with 17 significant digits
//! so that re-parsing gives back the exact value.

use std::collections::BTreeMap;
use std::io::{self, Write};

use plkks::dynamics::{max_deviation, Trajectory};
use plkks::MuWeights;
use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// `d.ddddddddddddddddde±x`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

struct ExactFloats;

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, ExactFloats);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub n: usize,
    pub x: f64,
    pub mu: BTreeMap<String, f64>,
    pub engine: &'static str,
    pub seed: u64,
    pub truncated: bool,
}

pub fn mu_map(mu: &MuWeights) -> BTreeMap<String, f64> {
    mu.iter().map(|(j, w)| (j.to_string(), w)).collect()
}

/// Largest deviation from the double-bracket reference over the shared
/// samples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Deviations {
    pub reference: &'static str,
    pub samples: usize,
    pub q_max_abs: f64,
    pub p_max_abs: Option<f64>,
}

impl Deviations {
    pub fn against(reference: &Trajectory, other: &Trajectory) -> Self {
        let samples = reference.len().min(other.len());
        let p_max_abs = match (&reference.p, &other.p) {
            (Some(a), Some(b)) => Some(max_deviation(&a[..samples], &b[..samples])),
            _ => None,
        };
        Self {
            reference: reference.engine.name(),
            samples,
            q_max_abs: max_deviation(&reference.q[..samples], &other.q[..samples]),
            p_max_abs,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TrajectoryFile<'a> {
    pub meta: Meta,
    pub times: &'a [f64],
    pub q: &'a [Vec<f64>],
    pub p: Option<&'a [Vec<f64>]>,
    pub energy: &'a [f64],
    pub lax_spectrum: &'a [Vec<f64>],
    pub constraint_residual: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviations: Option<Deviations>,
}

impl<'a> TrajectoryFile<'a> {
    pub fn new(meta: Meta, traj: &'a Trajectory, deviations: Option<Deviations>) -> Self {
        Self {
            meta,
            times: &traj.times,
            q: &traj.q,
            p: traj.p.as_deref(),
            energy: &traj.energy,
            lax_spectrum: &traj.lax_spectrum,
            constraint_residual: traj.constraint_residual.as_deref(),
            deviations,
        }
    }
}

/// Header `t,q1..qn,p1..pn,energy,res`; p and residual cells stay empty when
/// the engine does not provide them. A truncated run ends with a
/// `# truncated` comment line.
pub fn to_csv(traj: &Trajectory, n: usize, truncated_at: Option<f64>) -> Vec<u8> {
    let mut out = String::from("t");
    for prefix in ["q", "p"] {
        for k in 1..=n {
            out.push_str(&format!(",{prefix}{k}"));
        }
    }
    out.push_str(",energy,res\n");
    for i in 0..traj.len() {
        let mut row = vec![fmt_f64(traj.times[i])];
        row.extend(traj.q[i].iter().map(|&v| fmt_f64(v)));
        match &traj.p {
            Some(p) => row.extend(p[i].iter().map(|&v| fmt_f64(v))),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        row.push(traj.energy.get(i).map(|&e| fmt_f64(e)).unwrap_or_default());
        row.push(
            traj.constraint_residual
                .as_ref()
                .and_then(|r| r.get(i))
                .map(|&r| fmt_f64(r))
                .unwrap_or_default(),
        );
        out.push_str(&row.join(","));
        out.push('\n');
    }
    if let Some(t) = truncated_at {
        out.push_str(&format!("# truncated at t = {}\n", fmt_f64(t)));
    }
    out.into_bytes()
}

pub fn deviations_csv(rows: &[(&str, Deviations)]) -> Vec<u8> {
    let mut out = String::from("engine,reference,samples,q_max_abs,p_max_abs\n");
    for (engine, d) in rows {
        out.push_str(&format!(
            "{engine},{},{},{},{}\n",
            d.reference,
            d.samples,
            fmt_f64(d.q_max_abs),
            d.p_max_abs.map(fmt_f64).unwrap_or_default()
        ));
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0, -0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            let json = to_json(&[v]).unwrap();
            let back: Vec<f64> = serde_json::from_slice(&json).unwrap();
            assert_eq!(back[0].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn non_finite_floats_become_null() {
        assert_eq!(to_json(&[f64::NAN]).unwrap(), b"[null]\n");
    }
}
