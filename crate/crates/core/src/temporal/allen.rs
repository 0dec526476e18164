//! The thirteen Allen base relations, relation sets, converse and composition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum AllenRelation {
    Before = 0,
    Meets = 1,
    Overlaps = 2,
    Starts = 3,
    During = 4,
    Finishes = 5,
    Equals = 6,
    FinishedBy = 7,
    Contains = 8,
    StartedBy = 9,
    OverlappedBy = 10,
    MetBy = 11,
    After = 12,
}

use AllenRelation::*;

impl AllenRelation {
    /// All thirteen relations in index order. A relation and its converse sit
    /// symmetrically around `Equals`.
    pub const ALL: [AllenRelation; 13] = [
        Before, Meets, Overlaps, Starts, During, Finishes, Equals, FinishedBy, Contains,
        StartedBy, OverlappedBy, MetBy, After,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn converse(self) -> Self {
        Self::ALL[12 - self.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            Before => "before",
            Meets => "meets",
            Overlaps => "overlaps",
            Starts => "starts",
            During => "during",
            Finishes => "finishes",
            Equals => "equals",
            FinishedBy => "finished-by",
            Contains => "contains",
            StartedBy => "started-by",
            OverlappedBy => "overlapped-by",
            MetBy => "met-by",
            After => "after",
        }
    }

    fn short(token: &str) -> Option<Self> {
        Some(match token {
            "b" => Before,
            "m" => Meets,
            "o" => Overlaps,
            "s" => Starts,
            "d" => During,
            "f" => Finishes,
            "eq" => Equals,
            "fi" => FinishedBy,
            "di" => Contains,
            "si" => StartedBy,
            "oi" => OverlappedBy,
            "mi" => MetBy,
            "bi" => After,
            _ => return None,
        })
    }

    /// The base relation holding between two intervals given by their
    /// endpoints. Requires `a_start < a_end` and `b_start < b_end`.
    pub fn between<T: PartialOrd + Copy>(a_start: T, a_end: T, b_start: T, b_end: T) -> Self {
        if a_end < b_start {
            return Before;
        }
        if a_end == b_start {
            return Meets;
        }
        if b_end < a_start {
            return After;
        }
        if b_end == a_start {
            return MetBy;
        }
        // The intervals share interior points from here on.
        if a_start == b_start {
            return if a_end == b_end {
                Equals
            } else if a_end < b_end {
                Starts
            } else {
                StartedBy
            };
        }
        if a_end == b_end {
            return if a_start > b_start { Finishes } else { FinishedBy };
        }
        if a_start < b_start {
            if a_end < b_end {
                Overlaps
            } else {
                Contains
            }
        } else if a_end < b_end {
            During
        } else {
            OverlappedBy
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllenRelation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown Allen relation `{s}`"))
    }
}

/// A subset of the thirteen base relations, one bit per relation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RelationSet(u16);

impl RelationSet {
    pub const EMPTY: RelationSet = RelationSet(0);
    pub const FULL: RelationSet = RelationSet((1 << 13) - 1);

    pub const fn from_bits(bits: u16) -> Self {
        RelationSet(bits & ((1 << 13) - 1))
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    pub fn single(r: AllenRelation) -> Self {
        RelationSet(1 << r.index())
    }

    pub fn of(rels: &[AllenRelation]) -> Self {
        rels.iter().fold(Self::EMPTY, |s, &r| s.with(r))
    }

    pub fn with(self, r: AllenRelation) -> Self {
        RelationSet(self.0 | (1 << r.index()))
    }

    pub fn contains(self, r: AllenRelation) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_full(self) -> bool {
        self == Self::FULL
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, o: Self) -> Self {
        RelationSet(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        RelationSet(self.0 & o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = AllenRelation> {
        AllenRelation::ALL.into_iter().filter(move |r| self.contains(*r))
    }

    pub fn converse(self) -> Self {
        self.iter().fold(Self::EMPTY, |s, r| s.with(r.converse()))
    }

    /// Composition lifted to sets: the union of pairwise base compositions.
    pub fn compose(self, other: Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::EMPTY;
        }
        // Any nonempty set composed with the universal relation is universal.
        if self.is_full() || other.is_full() {
            return Self::FULL;
        }
        let mut out = Self::EMPTY;
        for a in self.iter() {
            for b in other.iter() {
                out = out.union(compose(a, b));
                if out.is_full() {
                    return out;
                }
            }
        }
        out
    }

    pub fn names(self) -> Vec<&'static str> {
        self.iter().map(AllenRelation::name).collect()
    }
}

impl From<AllenRelation> for RelationSet {
    fn from(r: AllenRelation) -> Self {
        Self::single(r)
    }
}

impl FromIterator<AllenRelation> for RelationSet {
    fn from_iter<I: IntoIterator<Item = AllenRelation>>(iter: I) -> Self {
        iter.into_iter().fold(Self::EMPTY, |s, r| s.with(r))
    }
}

impl fmt::Debug for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

impl Serialize for RelationSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(AllenRelation::name))
    }
}

impl<'de> Deserialize<'de> for RelationSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names
            .iter()
            .map(|n| n.parse::<AllenRelation>())
            .collect::<Result<RelationSet, _>>()
            .map_err(serde::de::Error::custom)
    }
}

// Rows are the first operand, columns the second, both in index order:
// b m o s d f eq fi di si oi mi bi
const TABLE: [[&str; 13]; 13] = [
    // b
    ["b", "b", "b", "b", "b m o s d", "b m o s d", "b", "b", "b", "b", "b m o s d", "b m o s d", "*"],
    // m
    ["b", "b", "b", "m", "o s d", "o s d", "m", "b", "b", "m", "o s d", "f fi eq", "di si oi mi bi"],
    // o
    [
        "b", "b", "b m o", "o", "o s d", "o s d", "o", "b m o", "b m o fi di", "o fi di",
        "o oi s si d di f fi eq", "oi di si", "di si oi mi bi",
    ],
    // s
    ["b", "b", "b m o", "s", "d", "d", "s", "b m o", "b m o fi di", "s si eq", "oi d f", "mi", "bi"],
    // d
    ["b", "b", "b m o s d", "d", "d", "d", "d", "b m o s d", "*", "oi d f mi bi", "oi d f mi bi", "bi", "bi"],
    // f
    ["b", "m", "o s d", "d", "d", "f", "f", "f fi eq", "di si oi mi bi", "oi mi bi", "oi mi bi", "bi", "bi"],
    // eq
    ["b", "m", "o", "s", "d", "f", "eq", "fi", "di", "si", "oi", "mi", "bi"],
    // fi
    ["b", "m", "o", "o", "o s d", "f fi eq", "fi", "fi", "di", "di", "oi si di", "oi si di", "di si oi mi bi"],
    // di
    [
        "b m o fi di", "o fi di", "o fi di", "o fi di", "o oi d di s si f fi eq", "di si oi", "di",
        "di", "di", "di", "di si oi", "di si oi", "bi mi oi si di",
    ],
    // si
    ["b m o fi di", "o fi di", "o fi di", "s si eq", "oi d f", "oi", "si", "di", "di", "si", "oi", "mi", "bi"],
    // oi
    [
        "b m o fi di", "o fi di", "o oi d di s si f fi eq", "oi d f", "oi d f", "oi", "oi", "oi si di",
        "di si oi mi bi", "oi mi bi", "oi mi bi", "bi", "bi",
    ],
    // mi
    ["b m o fi di", "s si eq", "oi d f", "oi d f", "oi d f", "mi", "mi", "mi", "bi", "bi", "bi", "bi", "bi"],
    // bi
    [
        "*", "d f oi mi bi", "d f oi mi bi", "d f oi mi bi", "d f oi mi bi", "bi", "bi", "bi", "bi",
        "bi", "bi", "bi", "bi",
    ],
];

fn parse_cell(cell: &str) -> RelationSet {
    if cell == "*" {
        return RelationSet::FULL;
    }
    cell.split_whitespace()
        .map(|t| AllenRelation::short(t).expect("composition table token"))
        .collect()
}

static COMPOSITION: std::sync::LazyLock<[[RelationSet; 13]; 13]> = std::sync::LazyLock::new(|| {
    let mut out = [[RelationSet::EMPTY; 13]; 13];
    for (i, row) in TABLE.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            out[i][j] = parse_cell(cell);
        }
    }
    out
});

/// Relations `s` such that some intervals satisfy `A r1 B`, `B r2 C` and `A s C`.
pub fn compose(r1: AllenRelation, r2: AllenRelation) -> RelationSet {
    COMPOSITION[r1.index()][r2.index()]
}

pub fn converse(r: AllenRelation) -> AllenRelation {
    r.converse()
}

/// The qualitative relations the story generator emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseRelation {
    Before,
    After,
    SameTime,
}

impl CoarseRelation {
    pub const ALL: [CoarseRelation; 3] = [CoarseRelation::Before, CoarseRelation::After, CoarseRelation::SameTime];
}

pub fn coarse_to_allen(c: CoarseRelation) -> RelationSet {
    match c {
        CoarseRelation::Before => RelationSet::of(&[Before, Meets]),
        CoarseRelation::After => RelationSet::of(&[After, MetBy]),
        CoarseRelation::SameTime => RelationSet::of(&[Equals, Starts, StartedBy]),
    }
}
