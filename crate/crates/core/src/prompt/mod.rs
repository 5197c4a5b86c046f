//! Request construction and reply parsing for the language model.

mod envelope;
mod history;
mod instructions;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::SceneError;
use crate::scope::OutOfScopeTask;
use crate::sml::Command;

pub use envelope::{EnvelopeError, Mode, ResponseEnvelope, parse_envelope, render_envelope};
pub use history::{ConversationHistory, OutOfOrder, Role, Turn};
pub use instructions::{InstructionError, InstructionSet, Section};

/// Sent when the local pipeline has to ask the user for more detail.
pub const CLARIFICATION_TEMPLATE: &str = "It seems like your request is not clear. Could you please provide more details or clarify what you would like to achieve?";

/// Sent when the model's reply could not be used even after a repair attempt.
pub const ERROR_RECOVERY_TEMPLATE: &str = "I apologize for the error. Let's try a different approach.";

/// Fixed per-message overhead added to the character estimate.
const MESSAGE_OVERHEAD_TOKENS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("user input is empty")]
    EmptyInput,
    #[error("instructions and scene need about {needed} tokens, over the budget of {budget}")]
    BudgetTooSmall { needed: usize, budget: usize },
}

/// Rough token count at four characters per token.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

pub fn estimate_messages(messages: &[Message]) -> usize {
    messages
        .iter()
        .map(|m| estimate_tokens(&m.content) + MESSAGE_OVERHEAD_TOKENS)
        .sum()
}

/// Builds requests from a fixed instruction set and a token budget.
#[derive(Debug, Clone)]
pub struct PromptEngine {
    instructions: InstructionSet,
    system: String,
    pub token_budget: usize,
}

impl PromptEngine {
    pub const DEFAULT_TOKEN_BUDGET: usize = 32_000;

    pub fn new(instructions: InstructionSet) -> Self {
        let system = system_message(&instructions);
        Self {
            instructions,
            system,
            token_budget: Self::DEFAULT_TOKEN_BUDGET,
        }
    }

    pub fn with_budget(mut self, token_budget: usize) -> Self {
        self.token_budget = token_budget;
        self
    }

    pub fn instructions(&self) -> &InstructionSet {
        &self.instructions
    }

    pub fn system_text(&self) -> &str {
        &self.system
    }

    /// `[system, history window..., user]`. Oldest history turns are dropped
    /// first until the estimate fits the budget; the system message and the
    /// current request are never dropped.
    pub fn build_prompt(
        &self,
        history: &ConversationHistory,
        ssg_text: &str,
        user_input: &str,
    ) -> Result<Vec<Message>, PromptError> {
        if user_input.trim().is_empty() {
            return Err(PromptError::EmptyInput);
        }
        let system = Message::new(Role::System, self.system.clone());
        let user = Message::new(Role::User, user_message(ssg_text, user_input));
        let fixed = estimate_messages(&[system.clone(), user.clone()]);
        if fixed > self.token_budget {
            return Err(PromptError::BudgetTooSmall {
                needed: fixed,
                budget: self.token_budget,
            });
        }
        let window = history.window();
        let costs: Vec<usize> = window
            .iter()
            .map(|t| estimate_tokens(&t.text) + MESSAGE_OVERHEAD_TOKENS)
            .collect();
        let mut total: usize = fixed + costs.iter().sum::<usize>();
        let mut start = 0;
        while total > self.token_budget {
            total -= costs[start];
            start += 1;
        }
        let mut messages = Vec::with_capacity(window.len() - start + 2);
        messages.push(system);
        messages.extend(window[start..].iter().map(|t| Message::new(t.role, t.text.clone())));
        messages.push(user);
        Ok(messages)
    }
}

impl Default for PromptEngine {
    fn default() -> Self {
        Self::new(InstructionSet::bundled())
    }
}

pub fn user_message(ssg_text: &str, user_input: &str) -> String {
    format!("Semantic scene graph:\n{ssg_text}\n\nUser request: {}", user_input.trim())
}

/// Renders the system message: both instruction sets in full, the
/// out-of-scope list, the command grammar and the reply format.
pub fn system_message(instructions: &InstructionSet) -> String {
    let mut out = String::from(
        "You help a blind or low-vision user understand and change a 3D scene through conversation. \
         Each request includes a semantic scene graph in JSON. Positions are in meters, and the \
         egocentric fields describe each object relative to the player.\n\n",
    );
    out.push_str("# Accessibility support instructions\n");
    for s in &instructions.accessibility {
        out.push_str(&format!("\nThe following is a section about {}:\n", s.title));
        for r in &s.rules {
            out.push_str(r);
            out.push('\n');
        }
    }
    out.push_str("\n# Error prevention instructions\n\n");
    for r in instructions.error_prevention_rules() {
        out.push_str(r);
        out.push('\n');
    }
    out.push_str("\nRequests of these types are out of scope:\n");
    for t in &instructions.out_of_scope_tasks {
        out.push_str(&format!("- {}\n", t.descriptor()));
    }

    out.push_str(
        "\n# Scene modification language\n\n\
         Scene changes are written as a program, one statement per line. Object names are quoted \
         and match the scene graph names. `player` refers to the user. Colors are six-digit HEX. \
         Vectors are (x, y, z) in meters. Lines starting with ';' are comments.\n\n",
    );
    for c in Command::ALL {
        out.push_str(&c.usage());
        out.push('\n');
    }
    out.push_str(
        "\nHighlighting creates a transparent marker sphere for 5 seconds. A textured object needs \
         simplify-material before set-color. There is no command for deleting objects, zooming or \
         edge enhancement.\n",
    );

    out.push_str(
        "\n# Reply format\n\n\
         Write the spoken reply as plain text. Then add exactly one fenced block tagged sml. Its \
         first line is `#mode: <mode>` where mode is one of modify, answer, clarify, out-of-scope \
         or error-recovery. For modify, the program follows the header. For every other mode the \
         block holds only the header, which takes the place of a null code field. For \
         out-of-scope, add a second line `#task: <task>` naming the unsupported task from the list \
         above.\n",
    );
    out
}

/// Why the local pipeline is asking for clarification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClarifyReason {
    Ambiguous { query: String, candidates: Vec<String> },
    NotFound { query: String },
}

impl ClarifyReason {
    pub fn from_scene_error(err: &SceneError) -> Option<Self> {
        match err {
            SceneError::Ambiguous { query, candidates } => Some(ClarifyReason::Ambiguous {
                query: query.clone(),
                candidates: candidates.clone(),
            }),
            SceneError::NotFound { query } => Some(ClarifyReason::NotFound { query: query.clone() }),
            _ => None,
        }
    }
}

pub fn clarification_reply(reason: Option<&ClarifyReason>) -> String {
    match reason {
        None => CLARIFICATION_TEMPLATE.to_string(),
        Some(ClarifyReason::Ambiguous { candidates, .. }) => {
            format!("{CLARIFICATION_TEMPLATE} Did you mean: {}?", candidates.join(", "))
        }
        Some(ClarifyReason::NotFound { query }) => {
            format!("{CLARIFICATION_TEMPLATE} No object named '{query}' exists.")
        }
    }
}

/// Names the unsupported capability and offers something that is supported.
pub fn out_of_scope_reply(task: &OutOfScopeTask) -> String {
    let alternative = match task {
        OutOfScopeTask::ZoomMagnifier => {
            " I can make an object bigger, or move it or you closer, instead."
        }
        OutOfScopeTask::EdgeEnhancement => {
            " I can change an object's color so it stands out from its surroundings, or highlight it for a few seconds."
        }
        OutOfScopeTask::TexturedColorChange => {
            " I can simplify its material to a plain color first, and then change that color."
        }
        OutOfScopeTask::ObjectDeletion => {
            " I can move the object away from you, make it smaller, or mute it instead."
        }
        OutOfScopeTask::Other(_) => "",
    };
    format!(
        "Sorry, that request is out of scope: {} is not supported in this scene.{alternative}",
        task.descriptor()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine() -> PromptEngine {
        PromptEngine::default()
    }

    #[test]
    fn first_turn_has_two_messages() {
        let msgs = engine()
            .build_prompt(&ConversationHistory::default(), "{}", "What is in the scene?")
            .unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].role, Role::System);
        assert_eq!(msgs[1].role, Role::User);
        assert!(msgs[1].content.ends_with("User request: What is in the scene?"));
    }

    #[test]
    fn system_message_holds_every_rule() {
        let e = engine();
        let sys = e.system_text();
        assert!(sys.contains("each unit is a meter"));
        for r in e.instructions().accessibility_rules().chain(e.instructions().error_prevention_rules()) {
            assert!(sys.contains(r), "missing rule: {r}");
        }
        for c in Command::ALL {
            assert!(sys.contains(&c.usage()));
        }
        for t in OutOfScopeTask::BUILTIN {
            assert!(sys.contains(&format!("- {}", t.descriptor())));
        }
    }

    #[test]
    fn history_is_truncated_to_max_turns() {
        let mut h = ConversationHistory::new(20);
        for i in 0..50u64 {
            h.push(Role::User, format!("question {i}"), i * 2).unwrap();
            h.push(Role::Assistant, format!("answer {i}"), i * 2 + 1).unwrap();
        }
        let msgs = engine().build_prompt(&h, "{}", "next").unwrap();
        assert_eq!(msgs.len(), 42);
        assert_eq!(msgs[1].content, "question 30");
        assert_eq!(msgs[40].content, "answer 49");
    }

    #[test]
    fn budget_drops_oldest_turns_first() {
        let mut h = ConversationHistory::new(100);
        for i in 0..30u64 {
            h.push(Role::User, "x".repeat(400) + &i.to_string(), i * 2).unwrap();
            h.push(Role::Assistant, "y".repeat(400), i * 2 + 1).unwrap();
        }
        let base = engine();
        let fixed = estimate_messages(&base.build_prompt(&ConversationHistory::default(), "{}", "go").unwrap());
        let e = base.with_budget(fixed + 10 * 105);
        let msgs = e.build_prompt(&h, "{}", "go").unwrap();
        assert!(estimate_messages(&msgs) <= e.token_budget);
        assert_eq!(msgs.len(), 12);
        assert_eq!(msgs[0].role, Role::System);
        assert_eq!(msgs[1].role, Role::User);
        assert!(msgs[1].content.ends_with("25"));

        let tiny = engine().with_budget(10);
        assert!(matches!(
            tiny.build_prompt(&h, "{}", "go"),
            Err(PromptError::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(
            engine().build_prompt(&ConversationHistory::default(), "{}", "  "),
            Err(PromptError::EmptyInput)
        );
    }

    #[test]
    fn deterministic() {
        let h = ConversationHistory::default();
        assert_eq!(
            engine().build_prompt(&h, "{\"a\":1}", "hi"),
            engine().build_prompt(&h, "{\"a\":1}", "hi")
        );
    }

    #[test]
    fn clarification_templates() {
        assert_eq!(clarification_reply(None), CLARIFICATION_TEMPLATE);
        let amb = ClarifyReason::Ambiguous {
            query: "cat".into(),
            candidates: vec!["White Cat".into(), "Black Cat".into()],
        };
        assert_eq!(
            clarification_reply(Some(&amb)),
            format!("{CLARIFICATION_TEMPLATE} Did you mean: White Cat, Black Cat?")
        );
        let nf = ClarifyReason::NotFound { query: "dragon".into() };
        assert_eq!(
            clarification_reply(Some(&nf)),
            format!("{CLARIFICATION_TEMPLATE} No object named 'dragon' exists.")
        );
    }

    #[test]
    fn out_of_scope_replies_name_the_task() {
        for t in OutOfScopeTask::BUILTIN {
            let r = out_of_scope_reply(&t);
            assert!(r.contains(t.descriptor()), "{r}");
            assert!(r.contains("out of scope"));
            let lower = r.to_lowercase();
            assert!(!lower.contains("done") && !lower.contains("i have") && !lower.contains("i've"));
        }
        assert!(out_of_scope_reply(&OutOfScopeTask::ZoomMagnifier).contains("zoom/magnifier"));
    }
}
