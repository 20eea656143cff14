//! Group (co)homology tables obtained from `H_n(V)` by re-indexing.
//!
//! Two identities are taken as given and recorded on every entry:
//! `H_n(V) = H_{n-N+1}(Gamma, St_N)` and Borel-Serre duality
//! `H_m(Gamma, St_N) = H^{d-m}(Gamma, Z~)` modulo `S_{N+1}`, `d = N(N-1)/2`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::homology::HomologyGroup;
use crate::isometry::Group;

pub const EQUIVARIANT_IDENTITY: &str = "H_n(V) = H_{n-N+1}(Gamma, St_N) (assumed)";
pub const DUALITY_IDENTITY: &str = "H_m(Gamma, St_N) = H^{d-m}(Gamma, Z~) mod S_{N+1}, d = N(N-1)/2 (assumed)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficients {
    /// Trivial module.
    Trivial,
    /// `Z` twisted by the determinant (GL with even `N`).
    Twisted,
}

impl Coefficients {
    pub fn for_group(group: Group, n: usize) -> Self {
        if group == Group::GL && n % 2 == 0 {
            Coefficients::Twisted
        } else {
            Coefficients::Trivial
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Coefficients::Trivial => "Z",
            Coefficients::Twisted => "Z~",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableEntry {
    pub degree: usize,
    /// Degree `n` of the complex the entry was read from.
    pub source_degree: usize,
    pub free_rank: usize,
    pub filtered_torsion: Vec<u64>,
    pub torsion: Vec<u64>,
    /// Entry is exact modulo `S_caveat`.
    pub caveat: u64,
    pub provenance: Vec<String>,
}

impl TableEntry {
    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.filtered_torsion.is_empty()
    }

    /// `Z^r + Z/a + ...`, or `0`.
    pub fn group_label(&self) -> String {
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        parts.extend(self.filtered_torsion.iter().map(|d| format!("Z/{d}")));
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// `H_m(Gamma, St_N)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SteinbergTable {
    pub group: Group,
    pub rank: usize,
    pub serre_bound: u64,
    pub entries: Vec<TableEntry>,
}

/// `H^m(Gamma, Z~)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CohomologyTable {
    pub group: Group,
    pub rank: usize,
    pub coefficients: Coefficients,
    pub vcd: usize,
    pub serre_bound: u64,
    pub entries: Vec<TableEntry>,
    pub provenance_chain: Vec<String>,
}

fn caveat(rank: usize, serre_bound: u64) -> u64 {
    serre_bound.max(rank as u64 + 1)
}

/// Shifts `H_n(V)` to `H_{n-N+1}(Gamma, St_N)`. Degrees `n < N - 1` carry no
/// interior cells and are dropped.
pub fn steinberg_table(homology: &[HomologyGroup], rank: usize, group: Group, serre_bound: u64) -> SteinbergTable {
    let caveat = caveat(rank, serre_bound);
    let entries = homology
        .iter()
        .filter(|h| h.degree + 1 >= rank)
        .map(|h| TableEntry {
            degree: h.degree + 1 - rank,
            source_degree: h.degree,
            free_rank: h.free_rank,
            filtered_torsion: h.filtered_torsion.clone(),
            torsion: h.torsion.clone(),
            caveat,
            provenance: vec![
                format!("H_{}(V) by Smith normal form, filtered mod S_{serre_bound}", h.degree),
                EQUIVARIANT_IDENTITY.to_string(),
            ],
        })
        .collect();
    SteinbergTable { group, rank, serre_bound, entries }
}

/// Borel-Serre re-indexing `m -> d - m`, sorted by cohomological degree.
pub fn cohomology_table(st: &SteinbergTable) -> CohomologyTable {
    let n = st.rank;
    let d = n * (n - 1) / 2;
    let mut entries: Vec<TableEntry> = st
        .entries
        .iter()
        .filter(|e| e.degree <= d)
        .map(|e| {
            let mut provenance = e.provenance.clone();
            provenance.push(DUALITY_IDENTITY.to_string());
            TableEntry { degree: d - e.degree, provenance, ..e.clone() }
        })
        .collect();
    entries.sort_by_key(|e| e.degree);
    CohomologyTable {
        group: st.group,
        rank: n,
        coefficients: Coefficients::for_group(st.group, n),
        vcd: d,
        serre_bound: st.serre_bound,
        entries,
        provenance_chain: vec![EQUIVARIANT_IDENTITY.to_string(), DUALITY_IDENTITY.to_string()],
    }
}

impl CohomologyTable {
    pub fn caveat(&self) -> u64 {
        caveat(self.rank, self.serre_bound)
    }

    pub fn title(&self) -> String {
        let g = match self.group {
            Group::GL => "GL",
            Group::SL => "SL",
        };
        format!("H^m({g}_{}(Z), {})", self.rank, self.coefficients.symbol())
    }

    /// Nonzero groups with the degrees carrying them, in order of first degree.
    pub fn cases(&self) -> Vec<(String, Vec<usize>)> {
        let mut cases: Vec<(String, Vec<usize>)> = Vec::new();
        for e in self.entries.iter().filter(|e| !e.is_zero()) {
            let label = e.group_label();
            match cases.iter_mut().find(|(l, _)| *l == label) {
                Some((_, ms)) => ms.push(e.degree),
                None => cases.push((label, vec![e.degree])),
            }
        }
        cases
    }
}

/// Case-style rendering followed by a per-degree listing.
pub fn render_text(table: &CohomologyTable, footnotes: &[String]) -> String {
    let mut out = String::new();
    let title = table.title();
    let _ = writeln!(out, "Modulo S_{}:", table.caveat());
    let cases = table.cases();
    let pad = " ".repeat(title.len() + 3);
    if cases.is_empty() {
        let _ = writeln!(out, "{title} = 0  for all m");
    } else {
        for (i, (label, ms)) in cases.iter().enumerate() {
            let lead = if i == 0 { format!("{title} = ") } else { pad.clone() };
            let ms: Vec<String> = ms.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{lead}{label:<8} if m = {}", ms.join(", "));
        }
        let _ = writeln!(out, "{pad}{:<8} otherwise", "0");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>3}  {:>4}  {:<16} raw torsion", "m", "n", "group");
    for e in &table.entries {
        let raw: Vec<String> = e.torsion.iter().map(|t| format!("Z/{t}")).collect();
        let raw = if raw.is_empty() { "-".to_string() } else { raw.join(" + ") };
        let _ = writeln!(out, "{:>3}  {:>4}  {:<16} {}", e.degree, e.source_degree, e.group_label(), raw);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Identities used:");
    for p in &table.provenance_chain {
        let _ = writeln!(out, "  {p}");
    }
    for f in footnotes {
        let _ = writeln!(out, "Note: {f}");
    }
    out
}

/// Shown when tables for both groups of the same rank exist; never used to
/// compute anything.
pub fn shapiro_footnote(rank: usize) -> String {
    format!("H^m(SL_{rank}(Z), Z) = H^m(GL_{rank}(Z), Z) + H^m(GL_{rank}(Z), Z~) modulo S_2 (informational)")
}
