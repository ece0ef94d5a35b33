//! The four worked examples on the fixture KB.

use super::invariants::Check;
use super::*;
use tablink::linker::TypeTier;
use tablink::table_linker::{link_table, Outcome};

fn ensure_eq<T: PartialEq + std::fmt::Debug>(got: T, want: T, what: &str) -> Check {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

/// "virus": films, songs and the like are rejected and sitelinks pick the
/// infectious agent.
pub fn virus() -> Check {
    let r = fixture_linker().link(&LinkRequest::cell("virus")).map_err(|e| e.to_string())?;
    ensure_eq(r.chosen_id(), Some(q(808)), "virus")?;
    ensure_eq(r.diagnostics.rejected_bad > 0, true, "bad candidates rejected")
}

/// Header "Prevalence" picks the property, the cell the item.
pub fn prevalence() -> Check {
    let l = fixture_linker();
    let header = l.link(&LinkRequest::header("Prevalence")).map_err(|e| e.to_string())?;
    let cell = l.link(&LinkRequest::cell("Prevalence")).map_err(|e| e.to_string())?;
    ensure_eq(header.chosen_id(), Some(p(1193)), "header Prevalence")?;
    ensure_eq(cell.chosen_id(), Some(q(719602)), "cell Prevalence")
}

/// Joint inference on the variant table: the header Lineage moves off the
/// genealogy sense and the cells link to variant items.
pub fn lineage() -> Check {
    let table = Table::from_json(VARIANTS).map_err(|e| e.to_string())?;
    let ann = link_table(&table, &fixture_linker()).map_err(|e| e.to_string())?;
    let id = |o: &Outcome| match o {
        Outcome::Entity { id, .. } => Some(*id),
        _ => None,
    };
    let header = id(&ann.headers[1].outcome);
    if header == Some(q(1517820)) {
        return Err("header Lineage linked to Q1517820".into());
    }
    ensure_eq(ann.lanes[1].dominant_type, Some(q(104450895)), "lineage lane type")?;
    let cells: Vec<Option<EntityId>> = ann.cells.iter().filter(|c| c.col == 1).map(|c| id(&c.outcome)).collect();
    ensure_eq(cells, vec![Some(q(9100001)), Some(q(9100002)), Some(q(9100003))], "lineage cells")?;
    let linker = fixture_linker();
    for c in ann.cells.iter().filter(|c| c.col == 1) {
        let rec = linker.index().get(id(&c.outcome).unwrap()).unwrap();
        ensure_eq(rec.direct_types.contains(&q(104450895)), true, "cell typed as variant")?;
    }
    Ok(())
}

/// An organization is accepted as a near miss when a location is expected.
pub fn near_miss() -> Check {
    let r = fixture_linker()
        .link(&LinkRequest::cell("Wuhan Institute of Virology").expecting(["location"]))
        .map_err(|e| e.to_string())?;
    let chosen = r.chosen.ok_or("no link")?;
    ensure_eq(chosen.id(), q(9200001), "near-miss link")?;
    ensure_eq(chosen.type_tier, TypeTier::NearMiss, "near-miss tier")
}
