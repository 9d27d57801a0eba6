use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use orchid::prompt::{render_meta_prompt, ParameterMap, Placeholder, TemplateId};
use tokio::runtime::Runtime;

use crate::support::{data_path, ensure, Outcome};

/// Splits the fixture into `name -> body`, each body keeping its final newline.
fn fixture_sections(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut lines = text.split_inclusive('\n');
    ensure!(lines.next() == Some("ORCHID-TEMPLATES v1\n"), "fixture header missing");
    let mut out = BTreeMap::new();
    let mut current: Option<(String, String)> = None;
    for line in lines {
        let header = line
            .strip_prefix("=== ")
            .and_then(|l| l.strip_suffix(" ===\n"))
            .filter(|n| n.chars().all(|c| c.is_ascii_alphanumeric()));
        match header {
            Some(name) => {
                if let Some((n, body)) = current.take() {
                    out.insert(n, body);
                }
                if name == "END" {
                    return Ok(out);
                }
                current = Some((name.to_owned(), String::new()));
            }
            None => match &mut current {
                Some((_, body)) => body.push_str(line),
                None => return Err(format!("text before first section: {line:?}")),
            },
        }
    }
    Err("fixture has no END marker".into())
}

pub fn run(_rt: &Runtime) -> Outcome {
    let start = Instant::now();
    let fixture = std::fs::read_to_string(data_path("fixtures/appendix_a.txt")).map_err(|e| e.to_string())?;
    let sections = fixture_sections(&fixture)?;
    ensure!(sections.len() == TemplateId::ALL.len(), "fixture has {} sections", sections.len());
    for id in TemplateId::ALL {
        let expected = sections.get(id.as_str()).ok_or_else(|| format!("fixture lacks {id}"))?;
        ensure!(id.source() == expected, "stored template {id} differs from the fixture");
    }

    let mut goldens = 0;
    let mut smallest = usize::MAX;
    for id in TemplateId::ALL {
        let dir = data_path("golden").join(id.as_str());
        let mut names: Vec<String> = std::fs::read_dir(&dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .filter_map(|n| n.strip_suffix(".params.json").map(str::to_owned))
            .collect();
        names.sort();
        smallest = smallest.min(names.len());
        for n in names {
            let raw = std::fs::read_to_string(dir.join(format!("{n}.params.json"))).map_err(|e| e.to_string())?;
            let values: BTreeMap<String, String> = serde_json::from_str(&raw).map_err(|e| e.to_string())?;
            let mut params = ParameterMap::new();
            for (k, v) in values {
                let key = Placeholder::from_name(&k).ok_or_else(|| format!("{id}/{n}: unknown placeholder {k}"))?;
                params.set(key, v);
            }
            let expected = std::fs::read_to_string(dir.join(format!("{n}.txt"))).map_err(|e| e.to_string())?;
            let got = render_meta_prompt(id, &params).map_err(|e| format!("{id}/{n}: {e}"))?;
            ensure!(got.text == expected, "{id}/{n}: rendering differs from golden");
            goldens += 1;
        }
    }
    ensure!(smallest >= 10, "a template has only {smallest} golden parameter sets");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("10 templates byte-identical to fixture, {goldens} goldens matched in {elapsed:.2?}"))
}
