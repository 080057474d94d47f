//! Line-oriented text persistence for states, unitaries and compiled circuits.
//!
//! ```text
//! kind dicke_state
//! N 2
//! dim 3
//! (1.0000000000000000e0, 0.0000000000000000e0)
//! (0.0000000000000000e0, 0.0000000000000000e0)
//! (0.0000000000000000e0, 0.0000000000000000e0)
//! ```
//!
//! Header lines are `key value`; complex entries follow one per line in
//! row-major order with 17 significant digits, which round-trips `f64`
//! exactly. `#` starts a comment. Errors carry 1-based line numbers.

use num_complex::Complex64;

use crate::dicke::{CollectiveAxis, DickeState, EnsembleDims, SymmetricUnitary};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::network::TwoNodeState;
use crate::varprep::{FinalRotation, OatLayer, VariationalAnsatz};

const TWO_NODE_ORDERING: &str = "row-major A-major";

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_complex(z: Complex64) -> String {
    format!("({}, {})", fmt_f64(z.re), fmt_f64(z.im))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Non-empty, comment-stripped lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

struct Document<'a> {
    headers: Vec<(usize, &'a str, &'a str)>,
    entries: Vec<(usize, &'a str)>,
    last_line: usize,
}

impl<'a> Document<'a> {
    fn parse(text: &'a str, kind: &str) -> Result<Self> {
        let mut headers = Vec::new();
        let mut entries = Vec::new();
        let mut last_line = 0;
        for (no, line) in content_lines(text) {
            last_line = no;
            if line.starts_with('(') {
                entries.push((no, line));
            } else if !entries.is_empty() {
                return Err(parse_err(no, "header line after the entries"));
            } else {
                let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
                headers.push((no, key, value.trim()));
            }
        }
        let doc = Self { headers, entries, last_line };
        let (no, found) = doc.header("kind")?;
        if found != kind {
            return Err(parse_err(no, format!("expected kind {kind}, found {found}")));
        }
        Ok(doc)
    }

    fn header(&self, key: &str) -> Result<(usize, &'a str)> {
        self.headers
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|(no, _, v)| (*no, *v))
            .ok_or_else(|| parse_err(self.headers.first().map_or(1, |h| h.0), format!("missing `{key}` line")))
    }

    fn usize_header(&self, key: &str) -> Result<(usize, usize)> {
        let (no, v) = self.header(key)?;
        v.parse().map(|x| (no, x)).map_err(|_| parse_err(no, format!("`{key}` must be a non-negative integer, got `{v}`")))
    }

    fn f64_header(&self, key: &str) -> Result<f64> {
        let (no, v) = self.header(key)?;
        parse_f64(no, v)
    }

    fn dims(&self) -> Result<(usize, EnsembleDims)> {
        let (no, n) = self.usize_header("N")?;
        EnsembleDims::new(n).map(|d| (no, d)).map_err(|e| parse_err(no, e.to_string()))
    }

    fn complex_entries(&self, expected: usize) -> Result<Vec<Complex64>> {
        if self.entries.len() != expected {
            let line = self.entries.get(expected).map_or(self.last_line.max(1), |e| e.0);
            return Err(parse_err(line, format!("expected {expected} entries, found {}", self.entries.len())));
        }
        self.entries.iter().map(|&(no, s)| parse_complex(no, s)).collect()
    }
}

fn parse_f64(line: usize, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| parse_err(line, format!("`{s}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("`{s}` is not finite")))
    }
}

fn parse_complex(line: usize, s: &str) -> Result<Complex64> {
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| parse_err(line, "expected `(re, im)`"))?;
    let (re, im) = inner.split_once(',').ok_or_else(|| parse_err(line, "expected `(re, im)`"))?;
    Ok(Complex64::new(parse_f64(line, re)?, parse_f64(line, im)?))
}

fn push_entries<'a>(out: &mut String, entries: impl Iterator<Item = &'a Complex64>) {
    for z in entries {
        out.push_str(&fmt_complex(*z));
        out.push('\n');
    }
}

pub fn write_dicke_state(state: &DickeState) -> String {
    let d = state.dims();
    let mut out = format!("kind dicke_state\nN {}\ndim {}\n", d.atoms(), d.dim());
    push_entries(&mut out, state.amplitudes().iter());
    out
}

pub fn read_dicke_state(text: &str) -> Result<DickeState> {
    let doc = Document::parse(text, "dicke_state")?;
    let (no, dims) = doc.dims()?;
    check_dim_header(&doc, dims.dim())?;
    let amps = doc.complex_entries(dims.dim())?;
    // validate the norm, but keep the stored values bit for bit
    DickeState::from_amplitudes(dims, amps.clone()).map_err(|e| parse_err(no, e.to_string()))?;
    Ok(DickeState::from_vector_unchecked(dims, amps.into()))
}

fn check_dim_header(doc: &Document, expected: usize) -> Result<()> {
    let (no, dim) = doc.usize_header("dim")?;
    if dim != expected {
        return Err(parse_err(no, format!("dim {dim} does not match N + 1 = {expected}")));
    }
    Ok(())
}

/// Row-major: entry `(r, c)` is line `r·dim + c` of the body.
pub fn write_unitary(u: &SymmetricUnitary) -> String {
    let d = u.dims();
    let m = u.matrix();
    let mut out = format!("kind symmetric_unitary\nN {}\ndim {}\n", d.atoms(), d.dim());
    for r in 0..d.dim() {
        push_entries(&mut out, (0..d.dim()).map(|c| &m[(r, c)]));
    }
    out
}

pub fn read_unitary(text: &str) -> Result<SymmetricUnitary> {
    let doc = Document::parse(text, "symmetric_unitary")?;
    let (no, dims) = doc.dims()?;
    let dim = dims.dim();
    check_dim_header(&doc, dim)?;
    let entries = doc.complex_entries(dim * dim)?;
    let m = CMatrix::from_row_slice(dim, dim, &entries);
    SymmetricUnitary::from_matrix(dims, m).map_err(|e| parse_err(no, e.to_string()))
}

pub fn write_two_node(state: &TwoNodeState) -> String {
    let d = state.dims();
    let mut out = format!(
        "kind two_node_state\nN {}\nordering {TWO_NODE_ORDERING}\ndim {}\n",
        d.atoms(),
        d.dim() * d.dim()
    );
    push_entries(&mut out, state.amplitudes().iter());
    out
}

pub fn read_two_node(text: &str) -> Result<TwoNodeState> {
    let doc = Document::parse(text, "two_node_state")?;
    let (no, dims) = doc.dims()?;
    let (ord_line, ordering) = doc.header("ordering")?;
    if ordering != TWO_NODE_ORDERING {
        return Err(parse_err(ord_line, format!("unsupported ordering `{ordering}`")));
    }
    let dim = dims.dim() * dims.dim();
    check_dim_header(&doc, dim)?;
    let amps = doc.complex_entries(dim)?;
    TwoNodeState::from_amplitudes(dims, amps.clone()).map_err(|e| parse_err(no, e.to_string()))?;
    Ok(TwoNodeState::from_vector_unchecked(dims, amps.into()))
}

/// A compiled amplification circuit together with how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitRecord {
    pub dims: EnsembleDims,
    pub ansatz: VariationalAnsatz,
    pub cost: f64,
    pub seed: u64,
    /// Free-form echo of the cost function, one line.
    pub cost_spec: String,
}

impl CircuitRecord {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "kind variational_circuit\nN {}\np {}\n# layer polar azimuth chi\n",
            self.dims.atoms(),
            self.ansatz.depth()
        );
        for layer in self.ansatz.layers() {
            let (polar, azimuth) = layer.axis.angles();
            out.push_str(&format!("layer {} {} {}\n", fmt_f64(polar), fmt_f64(azimuth), fmt_f64(layer.twist)));
        }
        let f = self.ansatz.final_rotation();
        let (polar, azimuth) = f.axis.angles();
        out.push_str(&format!("# final polar azimuth theta\nfinal {} {} {}\n", fmt_f64(polar), fmt_f64(azimuth), fmt_f64(f.angle)));
        out.push_str(&format!("cost {}\nseed {}\ncost_spec {}\n", fmt_f64(self.cost), self.seed, self.cost_spec.replace('\n', " ")));
        out
    }
}

fn three_numbers(no: usize, value: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(parse_err(no, format!("expected three numbers, found {}", parts.len())));
    }
    Ok([parse_f64(no, parts[0])?, parse_f64(no, parts[1])?, parse_f64(no, parts[2])?])
}

impl std::str::FromStr for CircuitRecord {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let doc = Document::parse(text, "variational_circuit")?;
        if let Some(&(no, _)) = doc.entries.first() {
            return Err(parse_err(no, "unexpected complex entry"));
        }
        let (_, dims) = doc.dims()?;
        let (p_line, p) = doc.usize_header("p")?;
        let mut layers = Vec::new();
        for &(no, key, value) in &doc.headers {
            if key == "layer" {
                let [polar, azimuth, chi] = three_numbers(no, value)?;
                layers.push(OatLayer { axis: CollectiveAxis::from_angles(polar, azimuth), twist: chi });
            }
        }
        if layers.len() != p {
            return Err(parse_err(p_line, format!("p = {p} but {} layer lines", layers.len())));
        }
        let (f_line, f) = doc.header("final")?;
        let [polar, azimuth, angle] = three_numbers(f_line, f)?;
        let ansatz = VariationalAnsatz::new(
            layers,
            FinalRotation { axis: CollectiveAxis::from_angles(polar, azimuth), angle },
        )
        .map_err(|e| parse_err(p_line, e.to_string()))?;
        let cost = doc.f64_header("cost")?;
        let (seed_line, seed) = doc.header("seed")?;
        let seed = seed.parse().map_err(|_| parse_err(seed_line, format!("bad seed `{seed}`")))?;
        let cost_spec = doc.header("cost_spec")?.1.to_string();
        Ok(Self { dims, ansatz, cost, seed, cost_spec })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{coherent_state, rotation, oat};
    use crate::network::{seed_state, SeedSpec};

    #[test]
    fn dicke_state_round_trip_is_exact() {
        let d = EnsembleDims::new(7).unwrap();
        let psi = coherent_state(d, 1.1, 0.3);
        let back = read_dicke_state(&write_dicke_state(&psi)).unwrap();
        assert_eq!(back.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn unitary_round_trip_is_exact() {
        let d = EnsembleDims::new(5).unwrap();
        let u = &rotation(d, CollectiveAxis::from_angles(0.4, 1.2), 0.9) * &oat(d, CollectiveAxis::X, 0.3);
        let text = write_unitary(&u);
        let back = read_unitary(&text).unwrap();
        assert_eq!(back.matrix(), u.matrix());
        assert_eq!(text.lines().count(), 3 + 36);
    }

    #[test]
    fn two_node_round_trip() {
        let d = EnsembleDims::new(3).unwrap();
        let s = seed_state(d, SeedSpec::new(0.7, 0.0).unwrap()).unwrap();
        let text = write_two_node(&s);
        assert!(text.contains("ordering row-major A-major"));
        assert_eq!(read_two_node(&text).unwrap().amplitudes(), s.amplitudes());
    }

    #[test]
    fn circuit_round_trip() {
        let a = VariationalAnsatz::from_raw(&[0.1, 0.2, 0.3, 1.0, 2.0, 0.05, 0.5, 0.6, 1.7]).unwrap();
        let rec = CircuitRecord {
            dims: EnsembleDims::new(20).unwrap(),
            ansatz: a,
            cost: -1.93,
            seed: 7,
            cost_spec: "target_distribution lambda=0.5".into(),
        };
        let text = rec.to_text();
        let back: CircuitRecord = text.parse().unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.ansatz.depth(), 2);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "kind dicke_state\nN 1\ndim 2\n(1.0, 0.0)\n(0.0, zero)\n";
        match read_dicke_state(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let short = "kind dicke_state\n# comment\nN 2\ndim 3\n(1.0, 0.0)\n";
        assert!(matches!(read_dicke_state(short), Err(Error::Parse { .. })));
        let wrong_kind = "kind symmetric_unitary\nN 1\ndim 2\n";
        assert!(matches!(read_dicke_state(wrong_kind), Err(Error::Parse { line: 1, .. })));
        let not_norm = "kind dicke_state\nN 1\ndim 2\n(1.0, 0.0)\n(1.0, 0.0)\n";
        assert!(matches!(read_dicke_state(not_norm), Err(Error::Parse { line: 2, .. })));
    }
}
