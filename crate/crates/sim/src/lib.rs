//! Robot simulator for the brain service.
//!
//! A visit greets the brain with a face probe, answers questions until the
//! brain is done or the replies run out, posts emotion frames and ends the
//! session. Both sides of the conversation are written as plain text:
//!
//! ```text
//! ROBOT: Hello! Welcome, I don't think we have met before.
//! ROBOT: What is your name?
//! YOU: Cristina
//! ...
//! [done]
//! [directive: register=informal tone=playful expression=sadness]
//! SUMMARY: interactions=1 predominant=sadness score=0.675
//! ```
//!
//! Directive lines appear only when the directive changes. Ids and
//! timestamps never appear, so scripted runs are byte-for-byte repeatable.

pub mod client;
pub mod scenario;

use std::io::{self, BufRead, Write};

use brain_core::perception::{EmotionFrame, FaceTemplate};
use brain_core::protocol::{
    AnswerMessage, AnswerStatus, Directive, FrameBatch, QuestionMessage, SessionHello, SessionSummary,
};

pub use client::{Client, SimError};
pub use scenario::{FaceSpec, Scenario, ScenarioError};

/// Everything the robot brings to one visit.
#[derive(Debug, Clone)]
pub struct Visit {
    pub client_id: String,
    pub face: FaceTemplate,
    pub frames: Vec<EmotionFrame>,
    pub audio: bool,
}

/// Where the visitor's replies come from.
pub trait ReplySource {
    /// `None` means the visitor has nothing more to say.
    fn next_reply(&mut self, question: &QuestionMessage) -> io::Result<Option<String>>;

    /// Whether the driver should write the reply to the transcript. A
    /// terminal already shows what the user typed.
    fn echo(&self) -> bool {
        true
    }
}

/// Replays a fixed list of replies.
#[derive(Debug, Clone)]
pub struct ScriptedReplies {
    replies: std::vec::IntoIter<String>,
}

impl ScriptedReplies {
    pub fn new(replies: Vec<String>) -> Self {
        Self { replies: replies.into_iter() }
    }
}

impl ReplySource for ScriptedReplies {
    fn next_reply(&mut self, _: &QuestionMessage) -> io::Result<Option<String>> {
        Ok(self.replies.next())
    }
}

/// Reads replies from a terminal, one per line. End of input stops the visit.
pub struct LineReplies<R, W> {
    input: R,
    prompt: W,
}

impl<R: BufRead, W: Write> LineReplies<R, W> {
    pub fn new(input: R, prompt: W) -> Self {
        Self { input, prompt }
    }
}

impl<R: BufRead, W: Write> ReplySource for LineReplies<R, W> {
    fn next_reply(&mut self, _: &QuestionMessage) -> io::Result<Option<String>> {
        write!(self.prompt, "YOU: ")?;
        self.prompt.flush()?;
        let mut line = String::new();
        if self.input.read_line(&mut line)? == 0 {
            writeln!(self.prompt)?;
            return Ok(None);
        }
        Ok(Some(line.trim_end_matches(['\r', '\n']).to_string()))
    }

    fn echo(&self) -> bool {
        false
    }
}

/// How a visit ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed(SessionSummary),
    /// Replies ran out before the questions did; the session is left for
    /// the server to time out.
    Stopped,
}

/// Runs one visit, writing the transcript to `out`.
pub fn run_visit(
    client: &Client,
    visit: &Visit,
    replies: &mut dyn ReplySource,
    out: &mut dyn Write,
) -> Result<Outcome, SimError> {
    let greeting = client.hello(&SessionHello {
        client_id: visit.client_id.clone(),
        face_probe: visit.face.clone(),
        timestamp: brain_core::now_millis(),
    })?;
    let session = greeting.session_id.as_str();
    writeln!(out, "ROBOT: {}", greeting.greeting_text)?;
    let mut stage = Stage { out, current: Directive::default() };
    stage.direct(&greeting.directive)?;

    loop {
        let question = client.question(session)?;
        if question.done {
            break;
        }
        writeln!(stage.out, "ROBOT: {}", question.prompt_text)?;
        let Some(reply) = replies.next_reply(&question)? else {
            return Ok(Outcome::Stopped);
        };
        if replies.echo() {
            writeln!(stage.out, "YOU: {reply}")?;
        }
        let answer = if visit.audio {
            AnswerMessage::audio(question.question_id, reply.into_bytes())
        } else {
            AnswerMessage::text(question.question_id, &reply)
        };
        let ack = client.answer(session, &answer)?;
        if ack.status == AnswerStatus::Reprompt {
            writeln!(stage.out, "[reprompt]")?;
        }
        stage.direct(&ack.directive)?;
    }
    writeln!(stage.out, "[done]")?;

    if !visit.frames.is_empty() {
        let directive = client.frames(session, &FrameBatch { frames: visit.frames.clone() })?;
        stage.direct(&directive)?;
    }

    let summary = client.end(session)?;
    write!(stage.out, "SUMMARY: interactions={}", summary.interaction_count)?;
    match &summary.predominant_emotion {
        Some(p) => writeln!(stage.out, " predominant={} score={:.3}", p.emotion, p.score)?,
        None => writeln!(stage.out, " predominant=none")?,
    }
    Ok(Outcome::Completed(summary))
}

struct Stage<'a> {
    out: &'a mut dyn Write,
    current: Directive,
}

impl Stage<'_> {
    fn direct(&mut self, directive: &Directive) -> io::Result<()> {
        if *directive != self.current {
            writeln!(self.out, "[directive: {directive}]")?;
            self.current = *directive;
        }
        Ok(())
    }
}

/// Runs a scenario and returns its transcript.
pub fn run_scripted(client: &Client, scenario: &Scenario) -> Result<(String, Outcome), SimError> {
    let mut out = Vec::new();
    let mut replies = ScriptedReplies::new(scenario.replies.clone());
    let outcome = run_visit(client, &scenario.visit(), &mut replies, &mut out)?;
    let text = String::from_utf8(out).expect("transcript is built from UTF-8 strings");
    Ok((text, outcome))
}

/// Unified diff from `expected` to `actual`, or `None` if they are identical.
pub fn transcript_diff(expected: &str, actual: &str) -> Option<String> {
    if expected == actual {
        return None;
    }
    Some(
        similar::TextDiff::from_lines(expected, actual)
            .unified_diff()
            .header("expected", "actual")
            .to_string(),
    )
}
