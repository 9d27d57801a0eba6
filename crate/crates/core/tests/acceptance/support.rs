use std::path::PathBuf;
use std::sync::Arc;

use orchid::engine::{Engine, EngineConfig, OperationKind, OperationRequest, TemperatureLevel};
use orchid::fixtures::persona_page;
use orchid::ids::DocumentId;
use orchid::provenance::ProvenanceStore;
use orchid::provider::ScriptedProvider;
use orchid::resolver::SelectionRange;
use orchid::store::{BlockPayload, DocumentKind, DocumentStore, Edit};
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

/// Detail line on success, reason on failure.
pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}
pub(crate) use ensure;

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

/// Must run inside the runtime; the engine spawns jobs on it.
pub fn engine(store: DocumentStore, provider: Arc<ScriptedProvider>) -> Engine {
    Engine::new(Arc::new(store), Arc::new(ProvenanceStore::new()), provider, EngineConfig::default())
}

pub fn debug_err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

const TITLES: [&str; 12] = [
    "Q3 report",
    "it's notes",
    "back\\slash memo",
    "日本語 doc",
    "plan",
    "plan_b",
    "Ünïcode survey",
    "{braces} draft",
    "a'b\"c",
    "Field study",
    "Competitor scan",
    "Interview_transcripts",
];

const PERSONAS: [&str; 4] = ["Dr. Ada Obi", "Lin O'Neil", "Marta Ruiz", "Sam \"Sky\" Lee"];

const WORDS: [&str; 10] = ["review", "the", "draft", "gaps", "{x}", "it's", "line\nbreak", "ünï", "\\n", "}"];

pub struct RandomWorkspace {
    pub store: DocumentStore,
    pub context: Vec<(DocumentId, String)>,
    pub personas: Vec<(DocumentId, String)>,
    pub host: DocumentId,
}

fn sentence(rng: &mut StdRng) -> String {
    let n = rng.random_range(1..6);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Context pages with awkward titles, some personas, and a host page whose
/// paragraphs mention a few of the context pages.
pub fn random_workspace(rng: &mut StdRng) -> RandomWorkspace {
    let store = DocumentStore::new();
    let mut titles = TITLES.to_vec();
    titles.shuffle(rng);
    let context: Vec<(DocumentId, String)> = titles[..rng.random_range(0..7)]
        .iter()
        .map(|t| {
            let blocks = (0..rng.random_range(0..3)).map(|_| BlockPayload::paragraph(sentence(rng))).collect();
            (store.create_document(DocumentKind::Context, t, blocks).unwrap().id, t.to_string())
        })
        .collect();
    let mut names = PERSONAS.to_vec();
    names.shuffle(rng);
    let personas: Vec<(DocumentId, String)> = names[..rng.random_range(0..4)]
        .iter()
        .map(|n| (persona_page(&store, n).unwrap(), n.to_string()))
        .collect();
    let mut paragraphs = vec![BlockPayload::paragraph(format!("Selected {}", sentence(rng)))];
    for _ in 0..rng.random_range(0..3) {
        let mut text = sentence(rng);
        if let Some((_, t)) = context.choose(rng) {
            text.push_str(&format!(" see @{t} here"));
        }
        paragraphs.push(BlockPayload::paragraph(text));
    }
    let host = store.create_document(DocumentKind::Workbook, "Host page", paragraphs).unwrap();
    if let Some((p, _)) = personas.choose(rng).filter(|_| rng.random_bool(0.5)) {
        store.update_document(&host.id, 1, vec![Edit::SetDefaultPersona { persona: Some(p.clone()) }]).unwrap();
    }
    RandomWorkspace { store, context, personas, host: host.id }
}

/// A menu operation or an inline prompt over the host page, with random
/// mentions in the prompt.
pub fn random_request(rng: &mut StdRng, ws: &RandomWorkspace) -> OperationRequest {
    let mut prompt = format!("please {}", sentence(rng));
    for _ in 0..rng.random_range(0..3) {
        if let Some((_, t)) = ws.context.choose(rng) {
            prompt.push_str(&format!(" with @{t} "));
        }
    }
    if rng.random_bool(0.3) {
        if let Some((_, n)) = ws.personas.choose(rng) {
            prompt.push_str(&format!(" as @{n} "));
        }
    }
    if rng.random_bool(0.2) {
        prompt.push_str(" and @nobody_here");
    }
    let level = *[TemperatureLevel::Precise, TemperatureLevel::Balanced, TemperatureLevel::Creative]
        .choose(rng)
        .unwrap();
    if rng.random_bool(0.25) {
        let page = ws.store.get(&ws.host).unwrap();
        let text: Vec<char> = page.blocks[0].text().unwrap().chars().collect();
        let start = rng.random_range(0..text.len() - 1);
        let end = rng.random_range(start + 1..=text.len());
        let sel = SelectionRange {
            document: ws.host.clone(),
            block: page.blocks[0].id.clone(),
            start,
            end,
            text: text[start..end].iter().collect(),
        };
        OperationRequest::inline(prompt, sel).with_temperature(level)
    } else {
        let kind = *OperationKind::MENU.choose(rng).unwrap();
        OperationRequest::new(kind, prompt, ws.host.clone()).with_temperature(level)
    }
}
