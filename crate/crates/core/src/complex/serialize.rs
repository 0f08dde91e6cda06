//! Plain-text complex format.
//!
//! ```text
//! hdxgeo-complex 1
//! n <n>
//! d <d>
//! p <p>
//! tau <tau>
//! seed <seed>
//! edges <count>
//! <i> <j>            (i < j, lexicographic)
//! triangles <count>
//! <i> <j> <k>        (i < j < k, lexicographic)
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so parsing and
//! re-writing a file reproduces it byte for byte.

use std::io::{BufRead, Write};

use super::graph::GeoGraph;
use super::twocomplex::TwoComplex;
use crate::{Error, Result};

const MAGIC: &str = "hdxgeo-complex 1";

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRecord {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub tau: f64,
    pub seed: u64,
    pub edges: Vec<(u32, u32)>,
    pub triangles: Vec<[u32; 3]>,
}

impl ComplexRecord {
    pub fn from_parts(g: &GeoGraph, c: &TwoComplex) -> Self {
        ComplexRecord {
            n: g.n(),
            d: g.cloud().dim(),
            p: g.p(),
            tau: g.tau(),
            seed: g.cloud().seed(),
            edges: g.edges().collect(),
            triangles: c.triangles().to_vec(),
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "n {}", self.n)?;
        writeln!(w, "d {}", self.d)?;
        writeln!(w, "p {}", self.p)?;
        writeln!(w, "tau {}", self.tau)?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "edges {}", self.edges.len())?;
        for (i, j) in &self.edges {
            writeln!(w, "{i} {j}")?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for [i, j, k] in &self.triangles {
            writeln!(w, "{i} {j} {k}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn parse<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            match lines.next() {
                Some(Ok(l)) => Ok(l),
                Some(Err(e)) => Err(Error::InvalidArgument(format!("read error at {what}: {e}"))),
                None => Err(Error::InvalidArgument(format!("unexpected end of file at {what}"))),
            }
        };
        if next("header")? != MAGIC {
            return Err(Error::InvalidArgument("missing complex header".into()));
        }
        fn field<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
            line.strip_prefix(key)
                .and_then(|s| s.strip_prefix(' '))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad `{key}` line: {line}")))
        }
        fn ints(line: &str, k: usize) -> Result<Vec<u32>> {
            let v: Vec<u32> = line.split(' ').map(str::parse).collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidArgument(format!("bad index line: {line}")))?;
            if v.len() != k {
                return Err(Error::InvalidArgument(format!("expected {k} indices: {line}")));
            }
            Ok(v)
        }
        let n = field(&next("n")?, "n")?;
        let d = field(&next("d")?, "d")?;
        let p = field(&next("p")?, "p")?;
        let tau = field(&next("tau")?, "tau")?;
        let seed = field(&next("seed")?, "seed")?;
        let ne: usize = field(&next("edges")?, "edges")?;
        let mut edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let v = ints(&next("edge")?, 2)?;
            edges.push((v[0], v[1]));
        }
        let nt: usize = field(&next("triangles")?, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let v = ints(&next("triangle")?, 3)?;
            triangles.push([v[0], v[1], v[2]]);
        }
        Ok(ComplexRecord { n, d, p, tau, seed, edges, triangles })
    }
}
