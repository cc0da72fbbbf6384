//! Research harness for skills-in-context prompting: seeded task generation
//! with exact oracles, skill-grounded reasoning traces, prompt assembly in
//! several ablation variants, a cached chat-completions client, and a
//! resumable evaluation loop with error-mode classification.

pub mod client;
pub mod eval;
pub mod prompts;
pub mod rng;
pub mod skills;
pub mod tasks;
pub mod traces;
