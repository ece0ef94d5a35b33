//! Materialized supertype closure over `subclass_of` / `subproperty_of`
//! edges, so "is X an instance of T, directly or by inheritance" is a lookup.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use crate::kb_model::{EntityId, ItemRecord, TypeEdge};

/// Map from a type to its strict ancestors, each list ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeClosure {
    ancestors: HashMap<EntityId, Vec<EntityId>>,
}

#[derive(Debug, Clone, Default)]
pub struct ClosureBuild {
    pub closure: TypeClosure,
    /// Edges whose endpoint kinds do not fit their relation; skipped.
    pub rejected: Vec<TypeEdge>,
}

pub fn build_closure(edges: &[TypeEdge]) -> ClosureBuild {
    build_closure_with_nodes(edges, std::iter::empty())
}

/// Like [`build_closure`], additionally registering `extra_nodes` (e.g.
/// every `direct_types` target) so they appear in the closure file even
/// without edges.
pub fn build_closure_with_nodes(
    edges: &[TypeEdge],
    extra_nodes: impl IntoIterator<Item = EntityId>,
) -> ClosureBuild {
    let (good, rejected): (Vec<TypeEdge>, Vec<TypeEdge>) = edges.iter().partition(|e| e.is_well_kinded());
    for e in &rejected {
        tracing::warn!("skipping cross-kind type edge {} -> {} ({:?})", e.child, e.parent, e.relation);
    }

    let mut nodes: BTreeSet<EntityId> = extra_nodes.into_iter().collect();
    for e in &good {
        nodes.insert(e.child);
        nodes.insert(e.parent);
    }
    let nodes: Vec<EntityId> = nodes.into_iter().collect();
    let position: HashMap<EntityId, u32> = nodes.iter().enumerate().map(|(i, id)| (*id, i as u32)).collect();

    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); nodes.len()];
    for e in &good {
        adjacency[position[&e.child] as usize].push(position[&e.parent]);
    }
    for succ in &mut adjacency {
        succ.sort_unstable();
        succ.dedup();
    }

    let components = strongly_connected(&adjacency);
    let mut component_of = vec![0usize; nodes.len()];
    for (c, members) in components.iter().enumerate() {
        for &m in members {
            component_of[m as usize] = c;
        }
    }

    // Components arrive sinks-first, so every successor component is done
    // before the components that point at it.
    let mut reach: Vec<Vec<u32>> = Vec::with_capacity(components.len());
    for (c, members) in components.iter().enumerate() {
        let mut acc: Vec<u32> = Vec::new();
        if members.len() > 1 {
            acc.extend_from_slice(members);
        }
        for &m in members {
            for &s in &adjacency[m as usize] {
                let sc = component_of[s as usize];
                if sc != c {
                    acc.push(s);
                    acc.extend_from_slice(&reach[sc]);
                }
            }
        }
        acc.sort_unstable();
        acc.dedup();
        reach.push(acc);
    }

    let mut ancestors = HashMap::with_capacity(nodes.len());
    for (i, id) in nodes.iter().enumerate() {
        let list = reach[component_of[i]]
            .iter()
            .filter(|&&a| a as usize != i)
            .map(|&a| nodes[a as usize])
            .collect();
        ancestors.insert(*id, list);
    }
    ClosureBuild { closure: TypeClosure { ancestors }, rejected }
}

/// Iterative Tarjan. Components are returned in reverse topological order.
fn strongly_connected(adjacency: &[Vec<u32>]) -> Vec<Vec<u32>> {
    const UNSEEN: u32 = u32::MAX;
    let n = adjacency.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut components = Vec::new();
    let mut next = 0u32;
    let mut frames: Vec<(u32, usize)> = Vec::new();

    for root in 0..n as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        frames.push((root, 0));
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            let vi = v as usize;
            if let Some(&w) = adjacency[vi].get(*pos) {
                *pos += 1;
                let wi = w as usize;
                if index[wi] == UNSEEN {
                    index[wi] = next;
                    low[wi] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[wi] = true;
                    frames.push((w, 0));
                } else if on_stack[wi] {
                    low[vi] = low[vi].min(index[wi]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent as usize] = low[parent as usize].min(low[vi]);
            }
            if low[vi] == index[vi] {
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w as usize] = false;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                members.sort_unstable();
                components.push(members);
            }
        }
    }
    components
}

impl TypeClosure {
    /// Strict ancestors of `id`, ascending; empty for unknown ids.
    pub fn ancestors(&self, id: EntityId) -> &[EntityId] {
        self.ancestors.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_ancestor(&self, ancestor: EntityId, of: EntityId) -> bool {
        self.ancestors(of).binary_search(&ancestor).is_ok()
    }

    pub fn len(&self) -> usize {
        self.ancestors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ancestors.is_empty()
    }

    /// All known types, ascending.
    pub fn types(&self) -> Vec<EntityId> {
        let mut ids: Vec<EntityId> = self.ancestors.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    /// One line per type: the type id followed by its ancestors, space separated.
    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for id in self.types() {
            write!(out, "{id}")?;
            for a in self.ancestors(id) {
                write!(out, " {a}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn read_from<R: BufRead>(input: R) -> io::Result<Self> {
        let mut ancestors = HashMap::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_ascii_whitespace();
            let Some(head) = fields.next() else { continue };
            let bad = |e: crate::kb_model::InvalidEntityId| {
                io::Error::new(io::ErrorKind::InvalidData, format!("closure line {}: {e}", n + 1))
            };
            let id: EntityId = head.parse().map_err(bad)?;
            let mut list = fields.map(|f| f.parse::<EntityId>().map_err(bad)).collect::<Result<Vec<_>, _>>()?;
            list.sort_unstable();
            list.dedup();
            ancestors.insert(id, list);
        }
        Ok(TypeClosure { ancestors })
    }
}

/// True iff `type_id` is one of the record's direct types or inherited
/// through them. Property records additionally match their own id and its
/// `subproperty_of` ancestors, which lets properties sit in tier lists.
pub fn has_type(record: &ItemRecord, type_id: EntityId, closure: &TypeClosure) -> bool {
    if record.direct_types.iter().any(|d| *d == type_id || closure.is_ancestor(type_id, *d)) {
        return true;
    }
    record.id.is_property() && (record.id == type_id || closure.is_ancestor(type_id, record.id))
}

/// Every id for which [`has_type`] holds, ascending.
pub fn all_types(record: &ItemRecord, closure: &TypeClosure) -> Vec<EntityId> {
    let mut out: Vec<EntityId> = Vec::new();
    for d in &record.direct_types {
        out.push(*d);
        out.extend_from_slice(closure.ancestors(*d));
    }
    if record.id.is_property() {
        out.push(record.id);
        out.extend_from_slice(closure.ancestors(record.id));
    }
    out.sort_unstable();
    out.dedup();
    out
}
