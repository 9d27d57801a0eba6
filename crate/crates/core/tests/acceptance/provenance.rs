use std::sync::Arc;

use orchid::engine::{JobState, ResultAction};
use orchid::prompt::TemplateId;
use orchid::provider::ScriptedProvider;
use orchid::store::{BlockPayload, Edit};
use rand::rngs::StdRng;
use rand::SeedableRng;
use tokio::runtime::Runtime;

use crate::support::{debug_err, engine, ensure, random_request, random_workspace, Outcome};

const WORKSPACES: u64 = 100;

/// Reads one `'...'` string with backslash escapes; returns it and the rest.
fn quoted(s: &str) -> Result<(String, &str), String> {
    let mut chars = s.strip_prefix('\'').ok_or("expected a quote")?.char_indices();
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => out.push(chars.next().ok_or("dangling backslash")?.1),
            '\'' => return Ok((out, &s[i + 2..])),
            c => out.push(c),
        }
    }
    Err("unterminated string".into())
}

/// Titles from a `[{'title': '..', 'text': '..'}, ...]` literal at the start of `s`.
fn list_titles(s: &str) -> Result<Vec<String>, String> {
    let mut rest = s.strip_prefix('[').ok_or("expected [")?;
    let mut titles = Vec::new();
    if rest.starts_with(']') {
        return Ok(titles);
    }
    loop {
        rest = rest.strip_prefix("{'title': ").ok_or("expected title key")?;
        let (title, r) = quoted(rest)?;
        rest = r.strip_prefix(", 'text': ").ok_or("expected text key")?;
        let (_, r) = quoted(rest)?;
        rest = r.strip_prefix('}').ok_or("expected }")?;
        titles.push(title);
        if rest.starts_with(']') {
            return Ok(titles);
        }
        rest = rest.strip_prefix(", ").ok_or("expected separator")?;
    }
}

/// Titles serialized into `{context}` of a rendered prompt. Relies on
/// `{context}` being the first placeholder of every template that has one.
fn context_titles(template: TemplateId, rendered: &str) -> Result<Vec<String>, String> {
    let src = template.source();
    let at = src.find("{context}").ok_or_else(|| format!("{template} has no context"))?;
    let lead = &src[..at];
    ensure!(
        !lead.replace("{{", "").replace("}}", "").contains('{'),
        "{template}: a placeholder precedes context"
    );
    let lead = lead.replace("{{", "{").replace("}}", "}");
    let rest = rendered.strip_prefix(lead.as_str()).ok_or("rendered prompt does not start with the template lead")?;
    list_titles(rest)
}

pub fn run(rt: &Runtime) -> Outcome {
    let mut compared = 0;
    let mut documents = 0;
    for seed in 0..WORKSPACES {
        let mut rng = StdRng::seed_from_u64(seed);
        let ws = random_workspace(&mut rng);
        let request = random_request(&mut rng, &ws);
        let edit_target = ws.context.first().map(|(id, _)| id.clone());
        let provider = Arc::new(ScriptedProvider::new());
        let result: Result<(), String> = rt.block_on(async {
            let engine = engine(ws.store, provider.clone());
            let job = engine.submit_operation(request.clone()).map_err(debug_err)?;
            let done = engine.wait_job(&job).await.map_err(debug_err)?;
            ensure!(done.state == JobState::Complete, "job ended {:?}", done.state);

            let check = |job, prompt_index: usize| -> Result<usize, String> {
                let record = engine.provenance().by_job(job).map_err(debug_err)?;
                let prompts = provider.prompts();
                let prompt = &prompts[prompt_index];
                ensure!(prompt.params_digest == record.params_digest, "prompt/record digest mismatch");
                let rendered = context_titles(prompt.template, &prompt.text)?;
                let recorded: Vec<String> = record.titles().into_iter().map(str::to_owned).collect();
                ensure!(rendered == recorded, "context titles {rendered:?}, record {recorded:?}");
                Ok(rendered.len())
            };
            documents += check(&job, 0)?;

            let before = (*engine.provenance().by_job(&job).map_err(debug_err)?).clone();
            let before_text = before.render_text();
            if let Some(id) = &edit_target {
                let rev = engine.store().get(id).map_err(debug_err)?.revision;
                engine
                    .store()
                    .update_document(id, rev, vec![Edit::AppendBlock { payload: BlockPayload::paragraph("later") }])
                    .map_err(debug_err)?;
            }
            let block = done.block.ok_or("job has no result block")?;
            let outcome = engine.apply_result_action(&block, ResultAction::Regenerate).map_err(debug_err)?;
            let orchid::engine::ActionOutcome::Regenerated { job: second, .. } = outcome else {
                return Err("regenerate returned another outcome".into());
            };
            engine.wait_job(&second).await.map_err(debug_err)?;
            documents += check(&second, 1)?;
            let after = engine.provenance().by_job(&job).map_err(debug_err)?;
            ensure!(*after == before, "record for {job} changed after regenerate");
            ensure!(after.render_text() == before_text, "rendered record changed after regenerate");
            let fresh = engine.provenance().by_job(&second).map_err(debug_err)?;
            ensure!(fresh.id != before.id, "regenerate reused the record");
            Ok(())
        });
        result.map_err(|e| format!("seed {seed}: {e}"))?;
        compared += 1;
    }
    Ok(format!("{compared} workspaces, {} prompts, {documents} context entries matched; records unchanged by regenerate", compared * 2))
}
