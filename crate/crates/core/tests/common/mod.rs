#![allow(dead_code)]

pub mod checks;

use std::sync::OnceLock;

use voronoi_core::complex::{build_complex, VoronoiComplex};
use voronoi_core::isometry::Group;
use voronoi_core::voronoi::{enumerate_perfect_forms, PerfectFormRecord};

static RECORDS: [OnceLock<Vec<PerfectFormRecord>>; 6] = [const { OnceLock::new() }; 6];
static COMPLEXES: [[OnceLock<VoronoiComplex>; 2]; 6] = [const { [const { OnceLock::new() }; 2] }; 6];

pub const GROUPS: [Group; 2] = [Group::GL, Group::SL];

pub fn records(n: usize) -> &'static [PerfectFormRecord] {
    RECORDS[n].get_or_init(|| enumerate_perfect_forms(n, Group::GL).expect("enumeration"))
}

pub fn complex(n: usize, group: Group) -> &'static VoronoiComplex {
    let slot = match group {
        Group::GL => 0,
        Group::SL => 1,
    };
    COMPLEXES[n][slot].get_or_init(|| build_complex(records(n), group).expect("complex"))
}
