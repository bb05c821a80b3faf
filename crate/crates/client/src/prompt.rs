//! Prompt templates with `{{slot}}` placeholders.
//!
//! A template must use each of the slots `elements`, `va_scale`,
//! `output_format` and `text`, and nothing else. Slot content other than the
//! review text comes from a [`PromptContent`], one per language.

use std::fs;
use std::path::Path;

use dimabsa_core::{serialize_tuples, ReviewInstance, SentimentTuple, TaskKind};

use crate::error::{ClientError, Result};

pub const SLOTS: [&str; 4] = ["elements", "va_scale", "output_format", "text"];

pub const DEFAULT_TEMPLATE: &str = "\
You are an annotator for aspect-based sentiment analysis.
Extract every opinion expressed in the review below.

Each opinion has these elements:
{{elements}}

{{va_scale}}

{{output_format}}

Review: {{text}}
";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut rest = source;
        let mut used = [false; SLOTS.len()];
        while let Some(start) = rest.find("{{") {
            if start > 0 {
                pieces.push(Piece::Literal(rest[..start].to_string()));
            }
            let after = &rest[start + 2..];
            let end = after
                .find("}}")
                .ok_or_else(|| ClientError::Template("unclosed '{{' in template".into()))?;
            let name = after[..end].trim();
            let idx = SLOTS
                .iter()
                .position(|s| *s == name)
                .ok_or_else(|| ClientError::Template(format!("unknown slot {{{{{name}}}}}")))?;
            used[idx] = true;
            pieces.push(Piece::Slot(SLOTS[idx]));
            rest = &after[end + 2..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Literal(rest.to_string()));
        }
        let missing: Vec<&str> = SLOTS.iter().zip(used).filter(|(_, u)| !u).map(|(s, _)| *s).collect();
        if !missing.is_empty() {
            return Err(ClientError::Template(format!("template lacks slot(s): {}", missing.join(", "))));
        }
        Ok(Self { pieces })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| ClientError::Template(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(&self, content: &PromptContent, text: &str) -> String {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot("elements") => out.push_str(&content.elements),
                Piece::Slot("va_scale") => out.push_str(&content.va_scale),
                Piece::Slot("output_format") => out.push_str(&content.output_format),
                Piece::Slot(_) => out.push_str(text),
            }
        }
        out
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("built-in template is valid")
    }
}

/// Language-specific text for the non-input slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptContent {
    pub elements: String,
    pub va_scale: String,
    pub output_format: String,
}

impl PromptContent {
    pub fn english(task: TaskKind) -> Self {
        Self::english_with_categories(task, &[])
    }

    /// English content; for DimASQP a non-empty `categories` list is spelled out.
    pub fn english_with_categories(task: TaskKind, categories: &[&str]) -> Self {
        let mut elements = String::from(
            "- aspect: the word or phrase the opinion is about, copied exactly from the review (NULL if it is only implied)\n",
        );
        if task.has_category() {
            elements.push_str("- category: the aspect category, written as ENTITY#ATTRIBUTE");
            if !categories.is_empty() {
                elements.push_str(&format!(", one of {}", categories.join(", ")));
            }
            elements.push('\n');
        }
        elements.push_str(
            "- opinion: the word or phrase expressing the opinion, copied exactly from the review (NULL if it is only implied)\n\
             - valence and arousal: two scores describing the opinion",
        );

        let va_scale = "Valence says how positive the opinion is, arousal how intense it is. \
Both range from 1.00 to 9.00: 1.00 is very negative or very calm, 5.00 is neutral, \
9.00 is very positive or very excited. Give both with two decimals."
            .to_string();

        let example = match task {
            TaskKind::DimAste => SentimentTuple::triplet("battery life", "long", 7.25, 6.5),
            TaskKind::DimAsqp => SentimentTuple::quadruplet("battery life", "BATTERY#OPERATION_PERFORMANCE", "long", 7.25, 6.5),
        };
        let example = serialize_tuples(std::slice::from_ref(&example), task).expect("example has the task's shape");
        let output_format = format!(
            "Answer with a JSON array and nothing else. Use one object per opinion, for example:\n{example}\n\
             If the review expresses no opinion, answer []."
        );
        Self { elements, va_scale, output_format }
    }
}

/// Template plus content for one task and language.
#[derive(Debug, Clone)]
pub struct PromptBuilder {
    pub template: PromptTemplate,
    pub content: PromptContent,
}

impl PromptBuilder {
    pub fn new(template: PromptTemplate, content: PromptContent) -> Self {
        Self { template, content }
    }

    /// The built-in English prompt for `task`.
    pub fn english(task: TaskKind) -> Self {
        Self::new(PromptTemplate::default(), PromptContent::english(task))
    }

    pub fn build(&self, instance: &ReviewInstance) -> String {
        self.template.render(&self.content, &instance.text)
    }
}

/// Fill `template` for `instance` with the built-in English content.
pub fn build_prompt(template: &PromptTemplate, instance: &ReviewInstance, task: TaskKind) -> String {
    template.render(&PromptContent::english(task), &instance.text)
}
