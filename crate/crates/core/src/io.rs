//! The canonical four-CSV dataset layout.
//!
//! ```text
//! topology.csv    team_id,node_a,node_b
//! endowments.csv  team_id,player_id,visibility,codes
//! messages.csv    team_id,time,sender_id,codes
//! answers.csv     team_id,player_id,answer,correct_answer
//! ```
//!
//! `codes` is a `;`-separated list of `STRENGTH:OPTION` tokens such as
//! `SN:2;MY:4`, or the literal `NEUTRAL`. Player names are arbitrary
//! strings; node indices are assigned per team by sorting the player names.
//! An empty `answer` field marks an individual who never submitted one.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::belief::{CodedMessage, StrengthCode};
use crate::error::{Error, Result};
use crate::task::{AnswerOption, Clue, TeamRecord, Topology, Visibility};

pub const TOPOLOGY_FILE: &str = "topology.csv";
pub const ENDOWMENTS_FILE: &str = "endowments.csv";
pub const MESSAGES_FILE: &str = "messages.csv";
pub const ANSWERS_FILE: &str = "answers.csv";

fn schema_err(file: &str, reason: impl Into<String>) -> Error {
    Error::Schema { file: file.into(), reason: reason.into() }
}

/// Parse a codes field: `SN:2;MY:4` or `NEUTRAL`.
pub fn parse_codes(s: &str) -> std::result::Result<Vec<(AnswerOption, StrengthCode)>, String> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err("empty codes field (use NEUTRAL for content-free rows)".into());
    }
    if trimmed.eq_ignore_ascii_case("neutral") {
        return Ok(Vec::new());
    }
    let mut codes = Vec::new();
    for token in trimmed.split(';') {
        let (strength, option) = token
            .split_once(':')
            .ok_or_else(|| format!("bad code token `{token}` (expected STRENGTH:OPTION)"))?;
        let strength = StrengthCode::parse(strength)
            .filter(|s| *s != StrengthCode::Neutral)
            .ok_or_else(|| format!("unknown strength `{strength}` in token `{token}`"))?;
        let number: u32 = option
            .trim()
            .parse()
            .map_err(|_| format!("bad option `{option}` in token `{token}`"))?;
        let option = AnswerOption::new(number).map_err(|e| e.to_string())?;
        codes.push((option, strength));
    }
    Ok(codes)
}

/// Render a codes list back into the file format.
pub fn format_codes(codes: &[(AnswerOption, StrengthCode)]) -> String {
    if codes.is_empty() {
        return "NEUTRAL".into();
    }
    codes
        .iter()
        .map(|(o, s)| format!("{}:{}", s.as_str(), o.number()))
        .collect::<Vec<_>>()
        .join(";")
}

struct CsvTable {
    file: String,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl CsvTable {
    fn read(dir: &Path, name: &str) -> Result<CsvTable> {
        let path = dir.join(name);
        let mut reader = csv::Reader::from_path(&path)
            .map_err(|source| Error::Csv { file: name.into(), source })?;
        let headers = reader
            .headers()
            .map_err(|source| Error::Csv { file: name.into(), source })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let rows = reader
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|source| Error::Csv { file: name.into(), source })?;
        Ok(CsvTable { file: name.into(), headers, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema_err(&self.file, format!("missing column `{name}`")))
    }

    fn field<'a>(&self, row: &'a csv::StringRecord, idx: usize, line: usize) -> Result<&'a str> {
        row.get(idx)
            .ok_or_else(|| schema_err(&self.file, format!("row {line}: too few fields")))
    }
}

type Codes = Vec<(AnswerOption, StrengthCode)>;

#[derive(Default)]
struct RawTeam {
    edges: Vec<(String, String)>,
    clues: Vec<(String, Visibility, Codes)>,
    messages: Vec<(f64, String, Codes)>,
    answers: BTreeMap<String, Option<AnswerOption>>,
    correct: Option<AnswerOption>,
}

/// Load a dataset directory into validated team records, sorted by team id.
pub fn load_dataset(dir: &Path) -> Result<Vec<TeamRecord>> {
    let mut teams: BTreeMap<String, RawTeam> = BTreeMap::new();

    let topology = CsvTable::read(dir, TOPOLOGY_FILE)?;
    let (t_team, t_a, t_b) = (
        topology.column("team_id")?,
        topology.column("node_a")?,
        topology.column("node_b")?,
    );
    for (line, row) in topology.rows.iter().enumerate() {
        let team = topology.field(row, t_team, line)?.to_string();
        let a = topology.field(row, t_a, line)?.trim().to_string();
        let b = topology.field(row, t_b, line)?.trim().to_string();
        teams.entry(team).or_default().edges.push((a, b));
    }

    let endowments = CsvTable::read(dir, ENDOWMENTS_FILE)?;
    let (e_team, e_player, e_vis, e_codes) = (
        endowments.column("team_id")?,
        endowments.column("player_id")?,
        endowments.column("visibility")?,
        endowments.column("codes")?,
    );
    for (line, row) in endowments.rows.iter().enumerate() {
        let team = endowments.field(row, e_team, line)?.to_string();
        let player = endowments.field(row, e_player, line)?.trim().to_string();
        let vis_str = endowments.field(row, e_vis, line)?;
        let vis = Visibility::parse(vis_str)
            .ok_or_else(|| schema_err(ENDOWMENTS_FILE, format!("row {line}: unknown visibility `{vis_str}`")))?;
        let codes = parse_codes(endowments.field(row, e_codes, line)?)
            .map_err(|e| schema_err(ENDOWMENTS_FILE, format!("row {line}: {e}")))?;
        teams
            .entry(team)
            .or_default()
            .clues
            .push((player, vis, codes));
    }

    let messages = CsvTable::read(dir, MESSAGES_FILE)?;
    let (m_team, m_time, m_sender, m_codes) = (
        messages.column("team_id")?,
        messages.column("time")?,
        messages.column("sender_id")?,
        messages.column("codes")?,
    );
    for (line, row) in messages.rows.iter().enumerate() {
        let team = messages.field(row, m_team, line)?.to_string();
        let time_str = messages.field(row, m_time, line)?;
        let time: f64 = time_str
            .trim()
            .parse()
            .map_err(|_| schema_err(MESSAGES_FILE, format!("row {line}: bad time `{time_str}`")))?;
        let sender = messages.field(row, m_sender, line)?.trim().to_string();
        let codes = parse_codes(messages.field(row, m_codes, line)?)
            .map_err(|e| schema_err(MESSAGES_FILE, format!("row {line}: {e}")))?;
        teams
            .entry(team)
            .or_default()
            .messages
            .push((time, sender, codes));
    }

    let answers = CsvTable::read(dir, ANSWERS_FILE)?;
    let (a_team, a_player, a_answer, a_correct) = (
        answers.column("team_id")?,
        answers.column("player_id")?,
        answers.column("answer")?,
        answers.column("correct_answer")?,
    );
    for (line, row) in answers.rows.iter().enumerate() {
        let team_id = answers.field(row, a_team, line)?.to_string();
        let player = answers.field(row, a_player, line)?.trim().to_string();
        let answer_str = answers.field(row, a_answer, line)?.trim();
        let answer = if answer_str.is_empty() {
            None
        } else {
            let n: u32 = answer_str.parse().map_err(|_| {
                schema_err(ANSWERS_FILE, format!("row {line}: bad answer `{answer_str}`"))
            })?;
            Some(AnswerOption::new(n).map_err(|e| schema_err(ANSWERS_FILE, format!("row {line}: {e}")))?)
        };
        let correct_str = answers.field(row, a_correct, line)?.trim();
        let correct_n: u32 = correct_str.parse().map_err(|_| {
            schema_err(ANSWERS_FILE, format!("row {line}: bad correct_answer `{correct_str}`"))
        })?;
        let correct = AnswerOption::new(correct_n)
            .map_err(|e| schema_err(ANSWERS_FILE, format!("row {line}: {e}")))?;
        let team = teams.entry(team_id.clone()).or_default();
        match team.correct {
            None => team.correct = Some(correct),
            Some(existing) if existing != correct => {
                return Err(schema_err(
                    ANSWERS_FILE,
                    format!("team {team_id}: inconsistent correct_answer ({existing} vs {correct})"),
                ));
            }
            _ => {}
        }
        team.answers.insert(player, answer);
    }

    teams
        .into_iter()
        .map(|(team_id, raw)| build_record(team_id, raw))
        .collect()
}

fn build_record(team_id: String, raw: RawTeam) -> Result<TeamRecord> {
    let fail = |reason: String| Error::InvalidRecord { team: team_id.clone(), reason };

    // Node indices from sorted player names in the endowment file.
    let players: Vec<String> = raw
        .clues
        .iter()
        .map(|(p, _, _)| p.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if players.is_empty() {
        return Err(fail("no endowment rows".into()));
    }
    let index_of = |name: &str| -> Result<usize> {
        players
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| fail(format!("unknown player `{name}` (not in endowments)")))
    };

    let mut edges = Vec::new();
    for (a, b) in &raw.edges {
        edges.push((index_of(a)?, index_of(b)?));
    }
    let topology = Topology::new(players.len(), edges)?;

    let mut endowments: Vec<Vec<Clue>> = vec![Vec::new(); players.len()];
    for (player, vis, codes) in raw.clues {
        let node = index_of(&player)?;
        endowments[node].push(
            Clue::new(codes, vis)
                .map_err(|e| fail(format!("player {player}: {e}")))?,
        );
    }
    // Public clue first, then file order (stable).
    for clues in &mut endowments {
        clues.sort_by_key(|c| c.visibility == Visibility::Private);
    }

    let mut messages = raw.messages;
    // Stable sort: equal timestamps keep file order.
    messages.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let transcript = messages
        .into_iter()
        .map(|(time, sender, codes)| {
            if !time.is_finite() {
                return Err(fail(format!("non-finite message time {time}")));
            }
            CodedMessage::new(time, index_of(&sender)?, codes)
        })
        .collect::<Result<Vec<_>>>()?;

    let correct_answer = raw.correct.ok_or_else(|| fail("no answers.csv rows".into()))?;
    let mut human_answers = BTreeMap::new();
    for (player, answer) in raw.answers {
        let node = index_of(&player)?;
        if let Some(a) = answer {
            human_answers.insert(node, a);
        }
    }

    let rec = TeamRecord {
        team_id,
        topology,
        players,
        endowments,
        transcript,
        human_answers,
        correct_answer,
    };
    rec.validate()?;
    Ok(rec)
}

/// Write records into the canonical four-CSV layout.
pub fn write_dataset(dir: &Path, recs: &[TeamRecord]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let wrap =
        |name: &'static str| move |source: csv::Error| Error::Csv { file: name.into(), source };

    let mut topology = csv::Writer::from_path(dir.join(TOPOLOGY_FILE))
        .map_err(wrap(TOPOLOGY_FILE))?;
    topology.write_record(["team_id", "node_a", "node_b"]).map_err(wrap(TOPOLOGY_FILE))?;
    for rec in recs {
        for (a, b) in rec.topology.edges() {
            topology
                .write_record([&rec.team_id, &rec.players[a], &rec.players[b]])
                .map_err(wrap(TOPOLOGY_FILE))?;
        }
    }
    topology.flush()?;

    let mut endowments = csv::Writer::from_path(dir.join(ENDOWMENTS_FILE))
        .map_err(wrap(ENDOWMENTS_FILE))?;
    endowments
        .write_record(["team_id", "player_id", "visibility", "codes"])
        .map_err(wrap(ENDOWMENTS_FILE))?;
    for rec in recs {
        for (node, clues) in rec.endowments.iter().enumerate() {
            for clue in clues {
                endowments
                    .write_record([
                        &rec.team_id,
                        &rec.players[node],
                        clue.visibility.as_str(),
                        &format_codes(&clue.codes),
                    ])
                    .map_err(wrap(ENDOWMENTS_FILE))?;
            }
        }
    }
    endowments.flush()?;

    let mut messages = csv::Writer::from_path(dir.join(MESSAGES_FILE))
        .map_err(wrap(MESSAGES_FILE))?;
    messages
        .write_record(["team_id", "time", "sender_id", "codes"])
        .map_err(wrap(MESSAGES_FILE))?;
    for rec in recs {
        for m in &rec.transcript {
            messages
                .write_record([
                    &rec.team_id,
                    &m.time.to_string(),
                    &rec.players[m.sender],
                    &format_codes(&m.codes),
                ])
                .map_err(wrap(MESSAGES_FILE))?;
        }
    }
    messages.flush()?;

    let mut answers = csv::Writer::from_path(dir.join(ANSWERS_FILE))
        .map_err(wrap(ANSWERS_FILE))?;
    answers
        .write_record(["team_id", "player_id", "answer", "correct_answer"])
        .map_err(wrap(ANSWERS_FILE))?;
    for rec in recs {
        for (node, player) in rec.players.iter().enumerate() {
            let answer = rec
                .human_answers
                .get(&node)
                .map(|a| a.number().to_string())
                .unwrap_or_default();
            answers
                .write_record([
                    &rec.team_id,
                    player,
                    &answer,
                    &rec.correct_answer.number().to_string(),
                ])
                .map_err(wrap(ANSWERS_FILE))?;
        }
    }
    answers.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{simulate_ensemble, SynthConfig};

    #[test]
    fn round_trip_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let recs = simulate_ensemble(&SynthConfig { teams: 5, seed: 42, ..Default::default() })
            .unwrap();
        write_dataset(dir.path(), &recs).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(recs, loaded);
    }

    #[test]
    fn codes_round_trip_and_errors() {
        let codes = parse_codes("SN:2;MY:4").unwrap();
        assert_eq!(format_codes(&codes), "SN:2;MY:4");
        assert_eq!(parse_codes("NEUTRAL").unwrap(), Vec::new());
        assert_eq!(format_codes(&[]), "NEUTRAL");
        assert!(parse_codes("").is_err());
        assert!(parse_codes("XX:2").is_err());
        assert!(parse_codes("SN:9").is_err());
        assert!(parse_codes("SN2").is_err());
        assert!(parse_codes("NEUTRAL:2").is_err());
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let recs =
            simulate_ensemble(&SynthConfig { teams: 1, seed: 0, ..Default::default() }).unwrap();
        write_dataset(dir.path(), &recs).unwrap();
        // Damage the messages header.
        let path = dir.path().join(MESSAGES_FILE);
        let contents = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, contents.replace("sender_id", "who")).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("sender_id"), "error was: {err}");
    }

    #[test]
    fn unknown_sender_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let recs =
            simulate_ensemble(&SynthConfig { teams: 1, seed: 0, ..Default::default() }).unwrap();
        write_dataset(dir.path(), &recs).unwrap();
        let path = dir.path().join(MESSAGES_FILE);
        let mut contents = std::fs::read_to_string(&path).unwrap();
        contents.push_str("S0000,99,ghost,MY:3\n");
        std::fs::write(&path, contents).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("ghost"), "error was: {err}");
    }

    #[test]
    fn inconsistent_correct_answer_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let recs =
            simulate_ensemble(&SynthConfig { teams: 1, seed: 1, ..Default::default() }).unwrap();
        write_dataset(dir.path(), &recs).unwrap();
        let path = dir.path().join(ANSWERS_FILE);
        let mut lines: Vec<String> =
            std::fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
        // Flip the correct_answer of the last row to a different option.
        let last = lines.last().unwrap().clone();
        let mut fields: Vec<&str> = last.split(',').collect();
        let flipped = if fields[3] == "1" { "2" } else { "1" };
        fields[3] = flipped;
        *lines.last_mut().unwrap() = fields.join(",");
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("inconsistent"), "error was: {err}");
    }

    #[test]
    fn equal_timestamps_keep_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs =
            simulate_ensemble(&SynthConfig { teams: 1, seed: 4, ..Default::default() }).unwrap();
        // Force all timestamps equal; the written order must survive a load.
        for m in &mut recs[0].transcript {
            m.time = 5.0;
        }
        write_dataset(dir.path(), &recs).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded[0].transcript, recs[0].transcript);
    }

    #[test]
    fn empty_answers_load_as_missing() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs =
            simulate_ensemble(&SynthConfig { teams: 1, seed: 9, ..Default::default() }).unwrap();
        recs[0].human_answers.remove(&2);
        write_dataset(dir.path(), &recs).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded[0].human_answers.len(), 4);
        assert!(!loaded[0].human_answers.contains_key(&2));
    }
}
