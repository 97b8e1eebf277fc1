//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode, Stdio};
use std::time::Instant;

use brain_core::adaptation::RuleSet;
use brain_core::perception::{AgeRange, EmotionFrame, FaceGallery, FaceTemplate, Gender};
use brain_core::protocol::{
    decode_message, encode_message, AnswerAck, AnswerMessage, AnswerStatus, Directive, ErrorBody, Expression,
    FrameBatch, GreetingResponse, Message, PredominantEmotion, ProtocolError, QuestionKind, QuestionMessage,
    Register, SessionHello, SessionSummary, Speaker, Tone, TranscriptLine,
};
use brain_core::user_model::{
    combine_certainty, predominant_emotion, AttributeSchema, Emotion, EmotionScores, Source, UserRecord,
    UserStore,
};
use brain_sim::Client;
use common::{golden, scenario, scenarios, stderr, stdout, Harness};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (u8, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let started = Instant::now();
    // Failures are reported per criterion; keep panic noise off the report.
    panic::set_hook(Box::new(|_| {}));

    let criteria: [Check; 7] = [
        (1, "certainty algebra", certainty_algebra),
        (2, "predominant emotion", predominant),
        (3, "face identification", face_identification),
        (6, "consent semantics", consent_semantics),
        (7, "adaptation rules", adaptation_rules),
        (9, "concurrency", concurrency),
        (10, "protocol", protocol),
    ];
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    for (n, name, check) in criteria {
        results.push((n, name, guarded(check)));
    }
    // 4, 5 and 8 share one server whose store outlives a restart.
    let [c4, c5, c8] = golden_conversations();
    results.push((4, "golden conversation, new user", c4));
    results.push((5, "golden conversation, recognized user", c5));
    results.push((8, "persistence and restart", c8));
    results.sort_by_key(|(n, ..)| *n);

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL: {reason}");
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!("{} of {} criteria passed in {elapsed:.1}s", results.len() - failed, results.len());
    if failed == 0 && elapsed < 30.0 {
        ExitCode::SUCCESS
    } else {
        if elapsed >= 30.0 {
            println!("suite exceeded the 30s budget");
        }
        ExitCode::FAILURE
    }
}

fn guarded(check: fn() -> Outcome) -> Outcome {
    panic::catch_unwind(check).unwrap_or_else(|e| Err(panic_message(e)))
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    let text = e
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown".into());
    format!("panicked: {text}")
}

// ---------------------------------------------------------------- 1

fn certainty_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cf = |a: f64, b: f64| combine_certainty(a, b).map_err(|e| format!("cf({a}, {b}): {e}"));
    let edges = [0.0, 1.0, 0.5, f64::EPSILON, 1.0 - f64::EPSILON, 1e-300];
    let sample = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.1) {
            *edges.choose(rng).unwrap()
        } else {
            rng.gen_range(0.0..=1.0)
        }
    };

    let cases = 2000;
    for _ in 0..cases {
        let (a, b, c) = (sample(&mut rng), sample(&mut rng), sample(&mut rng));
        let ab = cf(a, b)?;
        ensure!(ab == cf(b, a)?, "not commutative at ({a}, {b})");
        let left = cf(ab, c)?;
        let right = cf(a, cf(b, c)?)?;
        ensure!((left - right).abs() <= 1e-12, "not associative at ({a}, {b}, {c}): {left} vs {right}");
        ensure!((0.0..=1.0).contains(&ab), "cf({a}, {b}) = {ab} outside [0, 1]");
        ensure!(ab >= a.max(b), "cf({a}, {b}) = {ab} below max");
        // Oracle: the textbook form.
        let oracle = a + b - a * b;
        ensure!((ab - oracle).abs() <= 1e-12, "cf({a}, {b}) = {ab}, oracle {oracle}");
        let a2 = rng.gen_range(a..=1.0);
        ensure!(cf(a2, b)? >= ab, "not monotone: cf({a2}, {b}) < cf({a}, {b})");
        ensure!(cf(a, 0.0)? == a && cf(0.0, a)? == a, "0 is not the identity at {a}");
        ensure!(cf(a, 1.0)? == 1.0 && cf(1.0, a)? == 1.0, "1 is not absorbing at {a}");
    }
    ensure!(cf(0.5, 0.5)? == 0.75, "cf(0.5, 0.5) = {}", cf(0.5, 0.5)?);
    for bad in [-0.1, 1.1, f64::NAN, f64::INFINITY] {
        ensure!(combine_certainty(bad, 0.5).is_err(), "accepted {bad}");
        ensure!(combine_certainty(0.5, bad).is_err(), "accepted {bad}");
    }
    Ok(format!("{cases} generated cases, cf(0.5, 0.5) = 0.75"))
}

// ---------------------------------------------------------------- 2

fn oracle_predominant(frames: &[EmotionScores]) -> (Emotion, f64) {
    let order = [
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Joy,
        Emotion::Fear,
        Emotion::Surprise,
        Emotion::Contempt,
    ];
    let means: Vec<f64> =
        order.iter().map(|&e| frames.iter().map(|f| f.get(e)).sum::<f64>() / frames.len() as f64).collect();
    let top = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = means.iter().position(|&m| m == top).unwrap();
    (order[first], top)
}

fn predominant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sets = 200;
    let mut ties = 0;
    for case in 0..sets {
        let n = rng.gen_range(1..=25);
        let coarse = case % 4 == 0;
        let frames: Vec<EmotionScores> = (0..n)
            .map(|_| {
                let mut s = EmotionScores::default();
                for e in Emotion::ALL {
                    let v = if coarse { rng.gen_range(0..=4) as f64 / 4.0 } else { rng.gen_range(0.0..=1.0) };
                    s.set(e, v);
                }
                s
            })
            .collect();
        let got = predominant_emotion(&frames).map_err(|e| e.to_string())?;
        let want = oracle_predominant(&frames);
        ensure!(
            got.0 == want.0 && (got.1 - want.1).abs() <= 1e-12,
            "set {case}: got {got:?}, oracle {want:?}"
        );
    }
    // Seven-way ties resolve to the first emotion in the fixed order.
    for _ in 0..50 {
        let n = rng.gen_range(1..=10);
        let frames: Vec<EmotionScores> =
            (0..n).map(|_| EmotionScores::uniform(rng.gen_range(0..=8) as f64 / 8.0)).collect();
        let got = predominant_emotion(&frames).map_err(|e| e.to_string())?;
        ensure!(got.0 == Emotion::Sadness, "seven-way tie gave {:?}", got.0);
        ties += 1;
    }
    let none: [EmotionScores; 0] = [];
    ensure!(predominant_emotion(&none).is_err(), "empty frame set accepted");
    Ok(format!("{sets} random frame sets and {ties} seven-way ties match the oracle"))
}

// ---------------------------------------------------------------- 3

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn oracle_identify<'a>(gallery: &'a [(String, Vec<f64>)], probe: &[f64], threshold: f64) -> Option<&'a str> {
    let mut ranked: Vec<(f64, &str)> =
        gallery.iter().map(|(id, t)| (euclid(t, probe), id.as_str())).collect();
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(y.1)));
    ranked.first().filter(|(d, _)| *d <= threshold).map(|(_, id)| *id)
}

fn face_identification() -> Outcome {
    const D: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let thresholds = [0.0, 0.1, 0.3, 0.6, 0.9, 1.5, 3.0, 6.0];
    let mut probes_checked = 0;
    for case in 0..100 {
        let users = rng.gen_range(1..=20);
        let mut entries: Vec<(String, Vec<f64>)> = (0..users)
            .map(|i| (format!("user-{i:02}"), (0..D).map(|_| rng.gen_range(-1.0..=1.0)).collect()))
            .collect();
        if users > 1 && case % 5 == 0 {
            // A duplicate template forces a distance tie.
            let copy = entries[0].1.clone();
            entries[users - 1].1 = copy;
        }
        entries.shuffle(&mut rng);
        let mut gallery = FaceGallery::new(D);
        for (id, t) in &entries {
            gallery.enroll(id, FaceTemplate::new(t.clone())).map_err(|e| e.to_string())?;
        }

        let mut probes: Vec<Vec<f64>> =
            (0..5).map(|_| (0..D).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
        for (_, t) in entries.iter().take(5) {
            probes.push(t.clone());
            probes.push(t.iter().map(|x| (x + rng.gen_range(-0.1..=0.1)).clamp(-1.0, 1.0)).collect());
        }
        for probe in probes {
            let p = FaceTemplate::new(probe.clone());
            let mut previous: Option<String> = None;
            for &t in &thresholds {
                let got = gallery.identify(&p, t).map_err(|e| e.to_string())?.map(str::to_string);
                let want = oracle_identify(&entries, &probe, t).map(str::to_string);
                ensure!(got == want, "gallery {case}, threshold {t}: got {got:?}, oracle {want:?}");
                if let Some(prev) = &previous {
                    ensure!(
                        got.as_ref() == Some(prev),
                        "gallery {case}: raising threshold to {t} lost match {prev}"
                    );
                }
                previous = got;
            }
            probes_checked += 1;
        }
    }
    Ok(format!("100 galleries, {probes_checked} probes, {} thresholds each", thresholds.len()))
}

// ---------------------------------------------------------------- 4, 5, 8

fn run_golden(h: &Harness, name: &str) -> Result<String, String> {
    let out = h.scripted(&scenario(name), &[]);
    let text = stdout(&out);
    ensure!(out.status.code() == Some(0), "{name} exited {:?}: {}", out.status.code(), stderr(&out));
    ensure!(text == golden(name), "{name} transcript differs from golden");
    Ok(text)
}

fn find_user<'a>(store: &'a UserStore, name: &str) -> Vec<&'a UserRecord> {
    store.records().filter(|r| r.attribute("name").is_some_and(|a| a.value == name)).collect()
}

fn golden_conversations() -> [Outcome; 3] {
    let result = panic::catch_unwind(AssertUnwindSafe(|| {
        let mut h = Harness::new();
        let c4 = new_user(&h);
        let before = std::fs::read(h.store_path()).ok();
        h.restart();
        let c5_and_8 =
            if c4.is_ok() { recognized_user(&h, before) } else { Err("needs criterion 4".to_string()) };
        let (c5, c8) = match c5_and_8 {
            Ok((c5, c8)) => (c5, c8),
            Err(e) => (Err(e.clone()), Err(e)),
        };
        [c4, c5, c8]
    }));
    result.unwrap_or_else(|e| {
        let msg = panic_message(e);
        [Err(msg.clone()), Err(msg.clone()), Err(msg)]
    })
}

fn new_user(h: &Harness) -> Outcome {
    run_golden(h, "first_visit")?;
    let store = h.store();
    let users = find_user(&store, "Cristina");
    ensure!(users.len() == 1, "expected one Cristina, found {}", users.len());
    let record = users[0];
    for key in ["name", "consent", "profession", "favorite_color", "favorite_sport"] {
        let a = record.attribute(key).ok_or(format!("missing {key}"))?;
        ensure!(
            a.source == Source::Explicit && a.certainty == 1.0,
            "{key}: {:?} at {}",
            a.source,
            a.certainty
        );
    }
    for key in ["gender", "age_range"] {
        let a = record.attribute(key).ok_or(format!("missing implicit {key}"))?;
        ensure!(a.source == Source::Implicit && a.certainty > 0.0 && a.certainty < 1.0, "{key}: {a:?}");
    }
    ensure!(record.attribute("gender").unwrap().value == "female", "gender");
    ensure!(record.attribute("age_range").unwrap().value == "25-34", "age_range");
    ensure!(record.face_template().is_some(), "no face template despite consent");
    Ok("transcript byte-identical; 5 explicit attributes at 1.0, gender and age implicit".into())
}

fn recognized_user(h: &Harness, before: Option<Vec<u8>>) -> Result<(Outcome, Outcome), String> {
    // Restart first: the reloaded store must match what was written.
    let reloaded = h.store();
    let saved = store_from_bytes(before.ok_or("no store written")?)?;
    let round_trip = if reloaded.records().eq(saved.records()) {
        Ok(())
    } else {
        Err("store changed across restart".to_string())
    };

    let c5 = (|| {
        let text = run_golden(h, "revisit")?;
        let first = text.lines().next().unwrap_or_default();
        ensure!(first == "ROBOT: Hello Cristina! Do you feel better today?", "opening line was {first:?}");
        ensure!(!text.contains("YOU:"), "recognized user was asked questions again");
        Ok(format!("opens with {:?}", first.trim_start_matches("ROBOT: ")))
    })();

    let c8 = (|| {
        round_trip?;
        ensure!(c5.is_ok(), "revisit after restart failed");
        let store = h.store();
        let users = find_user(&store, "Cristina");
        ensure!(users.len() == 1, "recognition failed: {} Cristina records", users.len());
        let record = users[0];
        ensure!(record.interaction_count() == 2, "interaction count {}", record.interaction_count());
        let history: Vec<Emotion> = record.emotion_history().iter().map(|r| r.emotion).collect();
        ensure!(history == [Emotion::Sadness, Emotion::Joy], "history {history:?}");
        let served = Client::new(&h.addr())
            .map_err(|e| e.to_string())?
            .user(record.user_id())
            .map_err(|e| e.to_string())?;
        ensure!(&served == record, "served record differs from the store");
        Ok("store reloads unchanged; recognition and history survive restart".into())
    })();
    Ok((c5, c8))
}

fn store_from_bytes(bytes: Vec<u8>) -> Result<UserStore, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("snapshot.jsonl");
    std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
    UserStore::load(&path).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- 6

fn consent_semantics() -> Outcome {
    let h = Harness::new();
    run_golden(&h, "consent_no")?;
    let after_first = h.store();
    let marcos = find_user(&after_first, "Marco");
    ensure!(marcos.len() == 1, "expected one Marco, found {}", marcos.len());
    ensure!(!marcos[0].consent() && marcos[0].face_template().is_none(), "consent-no user kept a template");
    let first_id = marcos[0].user_id().to_string();

    let face = brain_sim::scenario::load_face(&scenarios().join("fixtures/marco_face.json"))
        .map_err(|e| e.to_string())?;
    let client = Client::new(&h.addr()).map_err(|e| e.to_string())?;
    let greeting = client
        .hello(&SessionHello { client_id: "acceptance".into(), face_probe: face, timestamp: 0 })
        .map_err(|e| e.to_string())?;
    ensure!(!greeting.recognized, "consent-no user was recognized");
    ensure!(greeting.user_id != first_id, "revisit reused the consent-no user");
    client.end(&greeting.session_id).map_err(|e| e.to_string())?;

    let text = run_golden(&h, "consent_no_revisit")?;
    ensure!(text.starts_with("ROBOT: Hello! Welcome"), "revisit greeting was personalized");
    let store = h.store();
    for r in find_user(&store, "Marco") {
        ensure!(r.face_template().is_none(), "user {} has a template", r.user_id());
    }
    Ok("revisit gets recognized=false and a generic greeting; no template stored".into())
}

// ---------------------------------------------------------------- 7

fn adaptation_rules() -> Outcome {
    let schema = AttributeSchema::default();
    let rules = RuleSet::default_for(&schema).map_err(|e| e.to_string())?;
    let young = ["0-17", "18-24", "25-34"];
    let states: Vec<Option<Emotion>> = std::iter::once(None).chain(Emotion::ALL.map(Some)).collect();
    let mut checked = 0;
    for age in AgeRange::ALL {
        let mut record = UserRecord::new("u");
        record
            .upsert_attribute(&schema, "age_range", age.as_str(), 0.7, Source::Implicit, 0)
            .map_err(|e| e.to_string())?;
        for &dominant in &states {
            let got = rules.evaluate(&record, dominant);
            let (register, tone) = if young.contains(&age.as_str()) {
                (Register::Informal, Tone::Playful)
            } else {
                (Register::Formal, Tone::Serious)
            };
            let expression = dominant.map_or(Expression::Neutral, Expression::Emotion);
            let want = Directive { register, tone, expression };
            ensure!(got == want, "age {} dominant {dominant:?}: got {got}, want {want}", age.as_str());
            checked += 1;
        }
    }
    ensure!(checked == 48, "checked {checked} combinations");
    Ok("all 6 age ranges x 8 expression states".into())
}

// ---------------------------------------------------------------- 9

fn concurrency() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixtures = scenarios().join("fixtures");
    let emotions = ["sad.json", "happy.json", "neutral_older.json"];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut faces: Vec<Vec<f64>> = Vec::new();
    while faces.len() < 8 {
        let f: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if faces.iter().all(|g| euclid(g, &f) > 1.5) {
            faces.push(f);
        }
    }
    let paths: Vec<_> = faces
        .iter()
        .enumerate()
        .map(|(i, face)| {
            let scenario = serde_json::json!({
                "client_id": format!("robot-{i}"),
                "face": face,
                "emotions": fixtures.join(emotions[i % 3]),
                "replies": [format!("Visitor{i}"), if i % 2 == 0 { "yes" } else { "no" }, "baker", "orange", "rowing"],
                "audio": i % 4 == 3,
            });
            let path = dir.path().join(format!("visitor{i}.json"));
            std::fs::write(&path, scenario.to_string()).unwrap();
            path
        })
        .collect();

    let serial_server = Harness::new();
    let serial: Vec<String> = paths.iter().map(|p| stdout(&serial_server.scripted(p, &[]))).collect();

    let parallel_server = Harness::new();
    let addr = parallel_server.addr();
    let children: Vec<_> = paths
        .iter()
        .map(|p| {
            Command::new(env!("CARGO_BIN_EXE_simulate"))
                .arg("scripted")
                .arg(p)
                .args(["--server", &addr])
                .stdout(Stdio::piped())
                .stderr(Stdio::piped())
                .spawn()
                .unwrap()
        })
        .collect();
    let parallel: Vec<_> = children.into_iter().map(|c| c.wait_with_output().unwrap()).collect();

    for (i, (s, p)) in serial.iter().zip(&parallel).enumerate() {
        ensure!(p.status.success(), "process {i} failed: {}", stderr(p));
        ensure!(s.contains("SUMMARY: interactions=1"), "serial run {i} has no summary");
        ensure!(*s == stdout(p), "visitor {i}: concurrent transcript differs from serial");
    }
    let store = parallel_server.store();
    ensure!(store.len() == 8, "{} users after 8 visits", store.len());
    let names: BTreeMap<_, _> =
        store.records().filter_map(|r| r.attribute("name").map(|a| (a.value.clone(), r))).collect();
    ensure!(names.len() == 8, "user records mixed up: {:?}", names.keys());
    Ok("8 concurrent transcripts and summaries identical to serial runs".into())
}

// ---------------------------------------------------------------- 10

fn random_string(rng: &mut ChaCha8Rng) -> String {
    let alphabet: Vec<char> = "abcXYZ019 -_\"\\/é✓\u{1F600}\n\t".chars().collect();
    let n = rng.gen_range(1..12);
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn random_directive(rng: &mut ChaCha8Rng) -> Directive {
    Directive {
        register: if rng.gen() { Register::Formal } else { Register::Informal },
        tone: if rng.gen() { Tone::Playful } else { Tone::Serious },
        expression: (*[None]
            .iter()
            .chain(Emotion::ALL.map(Some).iter())
            .collect::<Vec<_>>()
            .choose(rng)
            .unwrap())
        .map_or(Expression::Neutral, Expression::Emotion),
    }
}

fn random_frame(rng: &mut ChaCha8Rng, ts: i64) -> EmotionFrame {
    let mut scores = EmotionScores::default();
    for e in Emotion::ALL {
        scores.set(e, rng.gen_range(0.0..=1.0));
    }
    EmotionFrame {
        timestamp: ts,
        scores,
        gender: (*Gender::ALL.choose(rng).unwrap(), rng.gen_range(0.0..=1.0)),
        age_range: (*AgeRange::ALL.choose(rng).unwrap(), rng.gen_range(0.0..=1.0)),
    }
}

fn random_record(rng: &mut ChaCha8Rng, schema: &AttributeSchema) -> UserRecord {
    let mut r = UserRecord::new(random_string(rng));
    if rng.gen() {
        r.set_consent(true);
        r.attach_face_template(FaceTemplate::new((0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect()))
            .unwrap();
    }
    for entry in schema.entries() {
        if rng.gen() {
            r.upsert_attribute(
                schema,
                &entry.key,
                &random_string(rng),
                rng.gen_range(0.0..=1.0),
                entry.source,
                rng.gen(),
            )
            .unwrap();
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        let e = if rng.gen() {
            Some((*Emotion::ALL.choose(rng).unwrap(), rng.gen_range(0.0..=1.0)))
        } else {
            None
        };
        r.record_interaction(e);
    }
    r
}

fn round_trip<M: Message + PartialEq + std::fmt::Debug>(m: &M) -> Result<(), String> {
    let bytes = encode_message(m);
    ensure!(
        bytes.starts_with(br#"{"version":"v1""#),
        "no leading version: {}",
        String::from_utf8_lossy(&bytes)
    );
    let back: M = decode_message(&bytes).map_err(|e| format!("{e}: {}", String::from_utf8_lossy(&bytes)))?;
    ensure!(&back == m, "round trip changed {m:?} into {back:?}");
    ensure!(encode_message(&back) == bytes, "re-encoding is not stable");
    Ok(())
}

fn protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let schema = AttributeSchema::default();
    let rounds = 200;
    for _ in 0..rounds {
        let r = &mut rng;
        round_trip(&SessionHello {
            client_id: random_string(r),
            face_probe: FaceTemplate::new((0..r.gen_range(1..16)).map(|_| r.gen_range(-1.0..=1.0)).collect()),
            timestamp: r.gen(),
        })?;
        round_trip(&GreetingResponse {
            session_id: random_string(r),
            recognized: r.gen(),
            user_id: random_string(r),
            greeting_text: random_string(r),
            directive: random_directive(r),
        })?;
        round_trip(&QuestionMessage {
            question_id: random_string(r),
            prompt_text: random_string(r),
            attribute_key: random_string(r),
            kind: Some(if r.gen() { QuestionKind::FreeText } else { QuestionKind::Consent }),
            done: false,
        })?;
        round_trip(&QuestionMessage::done())?;
        let payload: Vec<u8> = (0..r.gen_range(1..64)).map(|_| r.gen()).collect();
        round_trip(&AnswerMessage::audio(random_string(r), payload))?;
        round_trip(&AnswerMessage::text(random_string(r), &random_string(r)))?;
        let mut ts = r.gen_range(-1000..1000);
        let frames = (0..r.gen_range(0..6))
            .map(|_| {
                ts += r.gen_range(0..50);
                random_frame(r, ts)
            })
            .collect();
        round_trip(&FrameBatch { frames })?;
        round_trip(&AnswerAck {
            status: if r.gen() { AnswerStatus::Accepted } else { AnswerStatus::Reprompt },
            directive: random_directive(r),
        })?;
        round_trip(&random_directive(r))?;
        round_trip(&SessionSummary {
            user_id: random_string(r),
            predominant_emotion: r.gen::<bool>().then(|| PredominantEmotion {
                emotion: *Emotion::ALL.choose(r).unwrap(),
                score: r.gen_range(0.0..=1.0),
            }),
            interaction_count: r.gen(),
            transcript: (0..r.gen_range(0..5))
                .map(|i| TranscriptLine {
                    speaker: if i % 2 == 0 { Speaker::Robot } else { Speaker::User },
                    text: random_string(r),
                })
                .collect(),
        })?;
        round_trip(&ErrorBody { code: random_string(r), message: random_string(r) })?;
        round_trip(&random_record(r, &schema))?;
    }

    let frame = r#"{"timestamp":1,"scores":{"sadness":0.1,"anger":0,"disgust":0,"joy":0.5,"fear":0,"surprise":0,"contempt":0},"gender":["female",0.9],"age_range":["25-34",0.8]}"#;
    let parse = |e: &ProtocolError| matches!(e, ProtocolError::Parse(_));
    let invalid = |e: &ProtocolError| matches!(e, ProtocolError::Validation { .. });
    let version = |e: &ProtocolError| matches!(e, ProtocolError::Version(_));
    type Class = fn(&ProtocolError) -> bool;
    let rejects: Vec<(&str, String, Class)> = vec![
        ("truncated JSON", r#"{"version":"v1","frames":["#.into(), parse),
        ("not JSON", "hello robot".into(), parse),
        ("unknown version", r#"{"version":"v9","frames":[]}"#.into(), version),
        ("missing version", r#"{"frames":[]}"#.into(), invalid),
        ("unknown field", r#"{"version":"v1","frames":[],"extra":1}"#.into(), invalid),
        (
            "unknown emotion",
            format!(r#"{{"version":"v1","frames":[{}]}}"#, frame.replace("\"joy\"", "\"happiness\"")),
            invalid,
        ),
        (
            "unknown age range",
            format!(r#"{{"version":"v1","frames":[{}]}}"#, frame.replace("25-34", "30-40")),
            invalid,
        ),
        (
            "score above one",
            format!(r#"{{"version":"v1","frames":[{}]}}"#, frame.replace("0.5", "1.5")),
            invalid,
        ),
        (
            "decreasing timestamps",
            format!(r#"{{"version":"v1","frames":[{},{}]}}"#, frame.replace(":1,", ":5,"), frame),
            invalid,
        ),
        ("not an object", r#"["v1"]"#.into(), invalid),
    ];
    for (what, body, class) in &rejects {
        match decode_message::<FrameBatch>(body.as_bytes()) {
            Ok(_) => return Err(format!("{what}: accepted")),
            Err(e) => ensure!(class(&e), "{what}: wrong error class {e:?}"),
        }
    }
    let answers: Vec<(&str, &str, Class)> = vec![
        (
            "unknown modality",
            r#"{"version":"v1","question_id":"q","modality":"video","payload":"YQ=="}"#,
            invalid,
        ),
        ("bad base64", r#"{"version":"v1","question_id":"q","modality":"text","payload":"***"}"#, invalid),
        ("empty payload", r#"{"version":"v1","question_id":"q","modality":"text","payload":""}"#, invalid),
    ];
    for (what, body, class) in &answers {
        match decode_message::<AnswerMessage>(body.as_bytes()) {
            Ok(_) => return Err(format!("{what}: accepted")),
            Err(e) => ensure!(class(&e), "{what}: wrong error class {e:?}"),
        }
    }

    // The live service maps the classes onto documented error codes.
    let h = Harness::new();
    let http = reqwest::blocking::Client::new();
    let post = |body: &str| -> Result<(u16, String), String> {
        let resp = http
            .post(format!("http://{}/v1/session", h.addr()))
            .body(body.to_string())
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let bytes = resp.bytes().map_err(|e| e.to_string())?;
        let body: ErrorBody = decode_message(&bytes).map_err(|e| e.to_string())?;
        Ok((status, body.code))
    };
    for (body, want) in [
        ("{", (400, "malformed_message")),
        (
            r#"{"version":"v2","client_id":"r","face_probe":[0,0,0,0,0,0,0,0],"timestamp":0}"#,
            (400, "unsupported_version"),
        ),
        (
            r#"{"version":"v1","client_id":"r","face_probe":[0,0,0,0,0,0,0,0],"timestamp":0,"mood":"sad"}"#,
            (400, "validation_error"),
        ),
        (
            r#"{"version":"v1","client_id":"r","face_probe":[0,0,9,0,0,0,0,0],"timestamp":0}"#,
            (400, "validation_error"),
        ),
    ] {
        let (status, code) = post(body)?;
        ensure!((status, code.as_str()) == want, "{body}: got {status} {code}");
    }
    Ok(format!(
        "{rounds} rounds over 11 message types; {} rejections classified",
        rejects.len() + answers.len() + 4
    ))
}
