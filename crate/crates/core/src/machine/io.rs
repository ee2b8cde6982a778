//! Operator panels: where READ gets its digits and DISP puts its result.

use std::collections::VecDeque;

use crate::microcode::{DisplayOutput, PanelInput};

pub trait InputProvider {
    /// Blocks until the operator has set the panel; `None` means no more input.
    fn read_panel(&mut self) -> Option<PanelInput>;
}

pub trait OutputSink {
    fn display(&mut self, out: DisplayOutput);
}

/// Parses one panel line: `digits=DDDD exp=E sign=+|-`. Only `digits` is
/// required; fields may come in any order.
pub fn parse_panel_line(line: &str) -> Result<PanelInput, String> {
    let mut panel = PanelInput::default();
    let mut have_digits = false;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| format!("expected key=value, got `{field}`"))?;
        match key {
            "digits" => {
                if value.len() != 4 || !value.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(format!("digits must be four decimal digits, got `{value}`"));
                }
                for (slot, b) in panel.digits.iter_mut().zip(value.bytes()) {
                    *slot = b - b'0';
                }
                have_digits = true;
            }
            "exp" => panel.lever = value.parse().map_err(|_| format!("bad exponent `{value}`"))?,
            "sign" => {
                panel.negative = match value {
                    "+" => false,
                    "-" => true,
                    _ => return Err(format!("sign must be + or -, got `{value}`")),
                }
            }
            _ => return Err(format!("unknown field `{key}`")),
        }
    }
    if !have_digits {
        return Err("missing digits=".to_string());
    }
    Ok(panel)
}

/// Panel settings consumed in order, one per READ.
#[derive(Debug, Clone, Default)]
pub struct ScriptedInput {
    queue: VecDeque<PanelInput>,
}

impl ScriptedInput {
    pub fn new(panels: impl IntoIterator<Item = PanelInput>) -> Self {
        ScriptedInput { queue: panels.into_iter().collect() }
    }

    /// Blank lines and `#` comments are skipped; errors carry the line number.
    pub fn parse(script: &str) -> Result<Self, String> {
        let mut queue = VecDeque::new();
        for (i, line) in script.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            queue.push_back(parse_panel_line(line).map_err(|e| format!("line {}: {e}", i + 1))?);
        }
        Ok(ScriptedInput { queue })
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl InputProvider for ScriptedInput {
    fn read_panel(&mut self) -> Option<PanelInput> {
        self.queue.pop_front()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectingOutput {
    pub shown: Vec<DisplayOutput>,
}

impl OutputSink for CollectingOutput {
    fn display(&mut self, out: DisplayOutput) {
        self.shown.push(out);
    }
}
