//! Design structure matrix over components.
//!
//! Row-receiver convention: a directed interaction `a -> b` of kind `k` puts
//! `k` in cell (row `b`, column `a`). Undirected interactions fill both cells.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use workbench_core::{Interaction, InteractionKind, Model, Uid};

use crate::error::SynthError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsmCell {
    pub row: Uid,
    pub col: Uid,
    pub kinds: BTreeSet<InteractionKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dsm {
    pub order: Vec<Uid>,
    /// Non-empty off-diagonal cells keyed by (row, col).
    pub cells: BTreeMap<(Uid, Uid), BTreeSet<InteractionKind>>,
}

#[derive(Serialize, Deserialize)]
struct DsmWire {
    order: Vec<Uid>,
    cells: Vec<DsmCell>,
}

impl Serialize for Dsm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DsmWire {
            order: self.order.clone(),
            cells: self.cell_list(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dsm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = DsmWire::deserialize(d)?;
        let mut cells = BTreeMap::new();
        for c in w.cells {
            if !c.kinds.is_empty() {
                cells.insert((c.row, c.col), c.kinds);
            }
        }
        let dsm = Dsm { order: w.order, cells };
        dsm.check().map_err(serde::de::Error::custom)?;
        Ok(dsm)
    }
}

impl Dsm {
    pub fn new(order: Vec<Uid>) -> Self {
        Dsm {
            order,
            cells: BTreeMap::new(),
        }
    }

    pub fn get(&self, row: &Uid, col: &Uid) -> BTreeSet<InteractionKind> {
        self.cells.get(&(row.clone(), col.clone())).cloned().unwrap_or_default()
    }

    pub fn insert(&mut self, row: &Uid, col: &Uid, kind: InteractionKind) {
        self.cells.entry((row.clone(), col.clone())).or_default().insert(kind);
    }

    /// Cells in matrix order (row position, then column position).
    pub fn cell_list(&self) -> Vec<DsmCell> {
        let pos: BTreeMap<&Uid, usize> = self.order.iter().enumerate().map(|(i, u)| (u, i)).collect();
        let mut v: Vec<DsmCell> = self
            .cells
            .iter()
            .map(|((r, c), k)| DsmCell {
                row: r.clone(),
                col: c.clone(),
                kinds: k.clone(),
            })
            .collect();
        v.sort_by_key(|c| (pos.get(&c.row).copied(), pos.get(&c.col).copied()));
        v
    }

    /// Structural invariants: unique order, empty diagonal, no empty cells,
    /// cells only over ordered uids.
    pub fn check(&self) -> Result<(), SynthError> {
        let set: BTreeSet<&Uid> = self.order.iter().collect();
        if set.len() != self.order.len() {
            return Err(SynthError::MalformedDsm("duplicate uid in order".into()));
        }
        for ((r, c), kinds) in &self.cells {
            if r == c {
                return Err(SynthError::MalformedDsm(format!("diagonal cell on {r}")));
            }
            if !set.contains(r) || !set.contains(c) {
                return Err(SynthError::MalformedDsm(format!("cell ({r}, {c}) outside the order")));
            }
            if kinds.is_empty() {
                return Err(SynthError::MalformedDsm(format!("empty cell ({r}, {c}) stored")));
            }
        }
        Ok(())
    }

    /// Matrix as rows of kind sets, in `order`.
    pub fn matrix(&self) -> Vec<Vec<BTreeSet<InteractionKind>>> {
        self.order
            .iter()
            .map(|r| self.order.iter().map(|c| self.get(r, c)).collect())
            .collect()
    }

    /// CSV with component names as header row and first column; cells hold
    /// `;`-joined kind letters.
    pub fn to_csv(&self, names: &BTreeMap<Uid, String>) -> Result<String, SynthError> {
        let name = |u: &Uid| names.get(u).cloned().unwrap_or_else(|| u.to_string());
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.order.iter().map(name));
        w.write_record(&header).map_err(|e| SynthError::Csv(e.to_string()))?;
        for r in &self.order {
            let mut rec = vec![name(r)];
            for c in &self.order {
                let letters: Vec<String> = self.get(r, c).iter().map(|k| k.letter().to_string()).collect();
                rec.push(letters.join(";"));
            }
            w.write_record(&rec).map_err(|e| SynthError::Csv(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| SynthError::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 strings"))
    }
}

/// DSM over `order` holding `interactions`.
pub fn build_dsm(order: &[Uid], interactions: &[Interaction]) -> Result<Dsm, SynthError> {
    let mut dsm = Dsm::new(order.to_vec());
    let known: BTreeSet<&Uid> = order.iter().collect();
    for i in interactions {
        for end in [&i.a, &i.b] {
            if !known.contains(end) {
                return Err(SynthError::UnknownComponent(end.clone()));
            }
        }
        if i.a == i.b {
            return Err(SynthError::MalformedDsm(format!("self-interaction on {}", i.a)));
        }
        dsm.insert(&i.b, &i.a, i.kind);
        if !i.directed {
            dsm.insert(&i.a, &i.b, i.kind);
        }
    }
    dsm.check()?;
    Ok(dsm)
}

/// Graph view of a DSM: its nodes and one interaction per kind and cell,
/// with symmetric pairs read back as undirected.
pub fn dsm_to_graph(dsm: &Dsm) -> Result<(Vec<Uid>, Vec<Interaction>), SynthError> {
    dsm.check()?;
    let mut out = Vec::new();
    for ((row, col), kinds) in &dsm.cells {
        for &k in kinds {
            let mirrored = dsm.get(col, row).contains(&k);
            if mirrored {
                if col < row {
                    out.push(Interaction::new(col.clone(), row.clone(), k, false));
                }
            } else {
                out.push(Interaction::new(col.clone(), row.clone(), k, true));
            }
        }
    }
    Ok((dsm.order.clone(), out))
}

/// DSM of the model's interactions. `order` defaults to every component in
/// uid order; interactions with an endpoint outside it are left out.
pub fn graph_to_dsm(model: &Model, order: Option<&[Uid]>) -> Result<Dsm, SynthError> {
    let order: Vec<Uid> = match order {
        Some(o) => {
            for u in o {
                if !model.components.contains_key(u) {
                    return Err(SynthError::UnknownComponent(u.clone()));
                }
            }
            o.to_vec()
        }
        None => model.component_ids(),
    };
    let set: BTreeSet<&Uid> = order.iter().collect();
    let inside: Vec<Interaction> = model
        .edges
        .interactions
        .iter()
        .filter(|i| set.contains(&i.a) && set.contains(&i.b))
        .cloned()
        .collect();
    build_dsm(&order, &inside)
}
