use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rwe_core::ideology::{
    align_sign, fit, read_model_tsv, write_model_tsv, EndorsementData, EntityRef, FitConfig, IdealPointModel,
    PositionTable,
};
use rwe_core::{FeedbackGraph, Positions};

use crate::config::{ItemKind, Weighting};
use crate::dataset::{parse_dataset, Format, InteractionRecord};
use crate::error::{HarnessError, Result};

pub fn load_position_table(path: &Path) -> Result<PositionTable> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_model_tsv(BufReader::new(file)).map_err(|source| HarnessError::File { path: path.to_path_buf(), source })
}

fn triples(records: &[InteractionRecord]) -> Vec<(&str, &str, u32)> {
    records.iter().map(|r| (r.user_id.as_str(), r.item_id.as_str(), r.weight)).collect()
}

/// Reads user→elite and user→content edge files; either may be absent.
pub fn load_endorsements(
    elite_edges: Option<&Path>,
    content_edges: Option<&Path>,
    weighting: Weighting,
) -> Result<EndorsementData> {
    let read = |p: Option<&Path>| p.map(|p| parse_dataset(p, Format::TsvEdges)).transpose();
    let elites = read(elite_edges)?.unwrap_or_default();
    let contents = read(content_edges)?.unwrap_or_default();
    Ok(EndorsementData::from_records(&triples(&elites), &triples(&contents), weighting.into()))
}

/// Fits the joint model and, given an anchor elite, fixes the sign.
pub fn fit_positions(
    data: &EndorsementData,
    config: &FitConfig,
    anchor: Option<(&str, i8)>,
) -> Result<IdealPointModel> {
    let model = fit(data, config)?;
    match anchor {
        None => Ok(model),
        Some((id, sign)) => {
            let e = data
                .elite_ids
                .iter()
                .position(|x| x == id)
                .ok_or_else(|| HarnessError::Config(format!("anchor elite '{id}' not in the elite edges")))?;
            Ok(align_sign(&model, EntityRef::Elite(e), sign)?)
        }
    }
}

pub fn write_model(path: &Path, model: &IdealPointModel, data: &EndorsementData) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_model_tsv(&mut out, model, data).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
}

/// The same positions as a lookup table.
pub fn table_from_model(model: &IdealPointModel, data: &EndorsementData) -> PositionTable {
    let mut t = PositionTable::default();
    let groups = [
        (&mut t.users, &data.user_ids, &model.theta, &model.alpha),
        (&mut t.elites, &data.elite_ids, &model.phi, &model.beta),
        (&mut t.contents, &data.content_ids, &model.psi, &model.gamma),
    ];
    for (map, ids, pos, bias) in groups {
        for ((id, &p), &b) in ids.iter().zip(pos).zip(bias) {
            map.insert(id.clone(), (p, b));
        }
    }
    t
}

pub fn item_position(table: &PositionTable, kind: ItemKind, id: &str) -> Option<f64> {
    match kind {
        ItemKind::Elite => table.elite(id),
        ItemKind::Content => table.content(id),
    }
}

/// Positions aligned with the graph's user and item indices.
pub fn graph_positions(table: &PositionTable, graph: &FeedbackGraph, kind: ItemKind) -> Positions {
    Positions::for_graph(graph, |id| table.user(id), |id| item_position(table, kind, id))
}
