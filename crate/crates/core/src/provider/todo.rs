//! Parsing of goal-decomposition responses into task descriptions.

/// Upper bound on tasks kept from one decomposition.
pub const MAX_TASKS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TodoPlan {
    pub items: Vec<String>,
    /// Usable lines dropped by the cap.
    pub overflow: usize,
}

impl TodoPlan {
    pub fn warning(&self) -> Option<String> {
        (self.overflow > 0).then(|| {
            format!(
                "plan had {} items; kept the first {MAX_TASKS}",
                self.items.len() + self.overflow
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("response contained no usable plan items")]
pub struct EmptyPlan;

/// Strips leading list markers: `1.`, `2)`, `-`, `*`, `•`, `+`, and
/// combinations like `- 1.`.
fn strip_marker(line: &str) -> &str {
    let mut s = line.trim();
    loop {
        let before = s;
        if let Some(rest) = s.strip_prefix(['-', '*', '•', '+', '·', '–']) {
            s = rest.trim_start();
        }
        let digits = s.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 {
            let rest = &s[digits..];
            if let Some(rest) = rest.strip_prefix(['.', ')', ':']) {
                s = rest.trim_start();
            }
        }
        if s == before {
            return s;
        }
    }
}

pub fn parse_todo_response(text: &str) -> Result<TodoPlan, EmptyPlan> {
    let all: Vec<String> = text
        .lines()
        .map(strip_marker)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect();
    if all.is_empty() {
        return Err(EmptyPlan);
    }
    let overflow = all.len().saturating_sub(MAX_TASKS);
    let mut items = all;
    items.truncate(MAX_TASKS);
    Ok(TodoPlan { items, overflow })
}
