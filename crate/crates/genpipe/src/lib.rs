//! Text-to-model generation: prompt a language model, parse and compile its
//! answer, and feed errors back until a valid model comes out or the
//! iteration cap is reached.

pub mod config;
pub mod prompt;
pub mod provider;

use std::time::Instant;

use powl_bpmn::{compile_model, dsl, Compiled, PowlModel};
use serde::Serialize;
use thiserror::Error;

pub use config::{ConfigError, ProviderConfig};
pub use prompt::{build_prompt, extract_code_block, Feedback};
pub use provider::{HttpProvider, MockEntry, MockProvider, Provider, ProviderError};

/// Transport retries allowed inside one iteration, on top of the first call.
pub const TRANSPORT_RETRIES: usize = 2;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub prompt: String,
    /// `None` when every transport attempt failed.
    pub response: Option<String>,
    pub errors: Vec<String>,
    pub transport_errors: Vec<String>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GenerationLog {
    pub iterations: Vec<IterationRecord>,
}

impl GenerationLog {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }
}

#[derive(Debug)]
pub struct Generated {
    pub model: PowlModel,
    pub compiled: Compiled,
    pub log: GenerationLog,
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("empty process description")]
    EmptyDescription,
    #[error("iteration cap must be at least 1")]
    ZeroIterations,
    #[error("no valid model after {} iteration(s)", .0.len())]
    Exhausted(GenerationLog),
    #[error("provider configuration: {message}")]
    Config { message: String, log: GenerationLog },
}

impl GenerateError {
    pub fn log(&self) -> Option<&GenerationLog> {
        match self {
            GenerateError::Exhausted(log) | GenerateError::Config { log, .. } => Some(log),
            _ => None,
        }
    }
}

/// Parses and compiles a program, returning every error message on failure.
pub fn check_program(code: &str) -> Result<(PowlModel, Compiled), Vec<String>> {
    let model = dsl::parse(code).map_err(|errs| errs.iter().map(|e| e.to_string()).collect::<Vec<_>>())?;
    match compile_model(model.clone()) {
        Ok(c) => Ok((model, c)),
        Err(e) => Err(vec![e.to_string()]),
    }
}

pub fn generate(
    description: &str,
    provider: &mut dyn Provider,
    max_iterations: usize,
) -> Result<Generated, GenerateError> {
    if description.trim().is_empty() {
        return Err(GenerateError::EmptyDescription);
    }
    if max_iterations == 0 {
        return Err(GenerateError::ZeroIterations);
    }
    let mut log = GenerationLog::default();
    let mut feedback: Option<Feedback> = None;
    for iteration in 1..=max_iterations {
        let started = Instant::now();
        let prompt = build_prompt(description, feedback.as_ref());
        let mut transport_errors = Vec::new();
        let mut response = None;
        for _ in 0..=TRANSPORT_RETRIES {
            match provider.complete(&prompt) {
                Ok(r) => {
                    response = Some(r);
                    break;
                }
                Err(ProviderError::Transport(e)) => transport_errors.push(e),
                Err(ProviderError::Config(message)) => {
                    log.iterations.push(IterationRecord {
                        iteration,
                        prompt,
                        response: None,
                        errors: vec![message.clone()],
                        transport_errors,
                        elapsed_secs: started.elapsed().as_secs_f64(),
                    });
                    return Err(GenerateError::Config { message, log });
                }
            }
        }
        let mut errors = Vec::new();
        let mut success = None;
        match &response {
            None => errors.push(format!("provider unreachable after {} attempts", TRANSPORT_RETRIES + 1)),
            Some(text) => match extract_code_block(text).map_err(|e| vec![e]).and_then(|code| check_program(&code)) {
                Ok(ok) => success = Some(ok),
                Err(es) => errors = es,
            },
        }
        if let (Some(text), false) = (&response, errors.is_empty()) {
            feedback = Some(Feedback {
                previous_output: text.clone(),
                errors: errors.clone(),
            });
        }
        log.iterations.push(IterationRecord {
            iteration,
            prompt,
            response,
            errors,
            transport_errors,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
        if let Some((model, compiled)) = success {
            return Ok(Generated { model, compiled, log });
        }
    }
    Err(GenerateError::Exhausted(log))
}
