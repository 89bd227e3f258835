//! Encoder checkpoints (kind `concept-encoder`).
//!
//! Header fields beyond the container envelope: `word_dim`, `hidden`,
//! `neighbor_cap`, `relations`, the `slots` table (relation, direction) in
//! slot order, the word vocabulary (`words`, unk row excluded) and the
//! concept vocabulary of the graph the model was trained on. Segments follow
//! [`EncoderParams::segments`] order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Composition, EncoderParams, LstmParams, WordVectorTable};
use crate::checkpoint::{read_container, write_container, SegmentReader};
use crate::error::{Error, Result};
use crate::kb::{Direction, KnowledgeGraph};

pub const ENCODER_KIND: &str = "concept-encoder";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEntry {
    pub relation: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EncoderHeader {
    word_dim: usize,
    hidden: usize,
    neighbor_cap: usize,
    relations: Vec<String>,
    slots: Vec<SlotEntry>,
    words: Vec<String>,
    concepts: Vec<String>,
    /// Free-form provenance such as the relation kind ("direct"/"indirect").
    #[serde(default)]
    label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderCheckpoint {
    pub params: EncoderParams,
    pub concepts: Vec<String>,
    pub label: String,
}

impl EncoderCheckpoint {
    /// Check the checkpoint's concept vocabulary against a graph.
    pub fn check_graph(&self, kg: &KnowledgeGraph) -> Result<()> {
        let same = self.concepts.len() == kg.num_concepts()
            && self
                .concepts
                .iter()
                .zip(kg.concepts())
                .all(|(a, b)| *a == b.surface);
        if same {
            Ok(())
        } else {
            Err(Error::Config(
                "checkpoint was trained on a different concept vocabulary".into(),
            ))
        }
    }
}

pub fn save_encoder<W: Write>(
    w: W,
    params: &EncoderParams,
    kg: &KnowledgeGraph,
    label: &str,
) -> Result<()> {
    let slots = params
        .relations
        .iter()
        .flat_map(|r| {
            [Direction::Forward, Direction::Inverse].map(|direction| SlotEntry {
                relation: r.clone(),
                direction,
            })
        })
        .collect();
    let header = EncoderHeader {
        word_dim: params.word_dim(),
        hidden: params.hidden(),
        neighbor_cap: params.neighbor_cap,
        relations: params.relations.clone(),
        slots,
        words: params.words.words().to_vec(),
        concepts: kg.concepts().iter().map(|c| c.surface.clone()).collect(),
        label: label.to_string(),
    };
    write_container(w, ENCODER_KIND, &header, &params.segments())
}

pub fn load_encoder<R: Read>(r: R) -> Result<EncoderCheckpoint> {
    let (h, segments): (EncoderHeader, _) = read_container(r, ENCODER_KIND)?;
    if h.slots.len() != 2 * h.relations.len() {
        return Err(Error::Format(
            "slot table does not match relation table".into(),
        ));
    }
    let (d, hid) = (h.word_dim, h.hidden);
    let width = 2 * hid;
    let mut seg = SegmentReader::new(segments);
    let words = WordVectorTable::from_parts(
        h.words.clone(),
        d,
        seg.take("words", (h.words.len() + 1) * d)?,
    )?;
    let mut lstm = |name: &str| -> Result<LstmParams> {
        Ok(LstmParams {
            input_dim: d,
            hidden: hid,
            w_x: seg.take(&format!("{name}.w_x"), 4 * hid * d)?,
            w_h: seg.take(&format!("{name}.w_h"), 4 * hid * hid)?,
            bias: seg.take(&format!("{name}.bias"), 4 * hid)?,
        })
    };
    let forward = lstm("forward")?;
    let backward = lstm("backward")?;
    let mut slots = Vec::with_capacity(h.slots.len());
    for i in 0..h.slots.len() {
        slots.push(Composition {
            weight: seg.take(&format!("slot{i}.weight"), width * width)?,
            bias: seg.take(&format!("slot{i}.bias"), width)?,
        });
    }
    seg.finish()?;
    let params = EncoderParams {
        words,
        forward,
        backward,
        slots,
        relations: h.relations,
        neighbor_cap: h.neighbor_cap,
    };
    if !params.all_finite() {
        return Err(Error::Format(
            "checkpoint contains non-finite parameters".into(),
        ));
    }
    Ok(EncoderCheckpoint {
        params,
        concepts: h.concepts,
        label: h.label,
    })
}
