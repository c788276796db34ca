//! The line protocol against small `/bin/sh` children.

use std::path::Path;
use std::process::Command;
use std::time::Duration;

use text_arena::bridge::{
    decode_observation, encode_observation, BridgeError, ExternalAgent, Reply, WireSession, WireState, OBS_END,
};
use text_arena::harness::EpisodeOptions;
use text_arena::{run_episode, Agent, AgentError, ControlAction, GameSource};

const SECOND: Duration = Duration::from_secs(1);

/// Answers every observation with the output of `$1 "$block_lines"`.
fn child(reply: &str) -> String {
    format!(
        r#"read -r hello; [ "$hello" = '###HELLO v1###' ] || exit 9; echo '###READY###'
n=0; first=
while IFS= read -r line; do
  if [ "$line" = '###OBS_END###' ]; then {reply}; n=0; first=
  else n=$((n+1)); [ -z "$first" ] && first="$line"; fi
done"#
    )
}

fn spawn(script: &str) -> WireSession {
    WireSession::spawn_shell(script, 17, SECOND).unwrap()
}

fn ask(w: &mut WireSession, narration: &str) -> Reply {
    w.send_observation(narration).unwrap();
    w.receive_command().unwrap()
}

fn alive(pid: u32) -> bool {
    Path::new(&format!("/proc/{pid}")).exists()
}

#[test]
fn encoding_examples() {
    assert_eq!(encode_observation(""), "###OBS_END###\n");
    assert_eq!(encode_observation("a\nb\n"), "a\nb\n###OBS_END###\n");
    assert_eq!(encode_observation("###OBS_END###"), "\\###OBS_END###\n###OBS_END###\n");
    assert_eq!(encode_observation("\\###OBS_END###"), "\\\\###OBS_END###\n###OBS_END###\n");
    assert_eq!(encode_observation("x\n\ny"), "x\n\ny\n###OBS_END###\n");
    let enc = encode_observation("\\###OBS_END###\nok");
    let lines: Vec<&str> = enc.lines().take_while(|l| *l != OBS_END).collect();
    assert_eq!(decode_observation(lines), "\\###OBS_END###\nok");
}

#[test]
fn handshake_and_exchange() {
    let mut w = spawn(&child(r#"echo "lines=$n first=$first""#));
    assert_eq!(w.state(), WireState::Idle);
    w.send_observation("Kitchen\nA warm kitchen.").unwrap();
    assert_eq!(w.state(), WireState::AwaitingCommand);
    assert_eq!(w.receive_command().unwrap(), Reply::Command("lines=2 first=Kitchen".into()));
    assert_eq!(ask(&mut w, ""), Reply::Command("lines=0 first=".into()));
    assert_eq!(ask(&mut w, "###OBS_END###"), Reply::Command("lines=1 first=\\###OBS_END###".into()));
}

#[test]
fn protocol_state_is_enforced() {
    let mut w = spawn(&child("echo look"));
    assert!(matches!(w.receive_command(), Err(BridgeError::Protocol(_))));
    w.send_observation("a").unwrap();
    assert!(matches!(w.send_observation("b"), Err(BridgeError::Protocol(_))));
}

#[test]
fn seed_is_passed_in_the_environment() {
    let mut w = spawn(&child(r#"echo "seed $TEXT_ARENA_SEED""#));
    assert_eq!(ask(&mut w, "x"), Reply::Command("seed 17".into()));
}

#[test]
fn control_tokens_are_recognised() {
    let mut w = spawn(&child(r#"case "$first" in q) echo '##QUIT##';; r) echo '##RESTART##';; *) echo '##SOFTRESTART##';; esac"#));
    assert_eq!(ask(&mut w, "q"), Reply::Control(ControlAction::Quit));
    assert_eq!(ask(&mut w, "r"), Reply::Control(ControlAction::Restart));
    assert_eq!(ask(&mut w, "s"), Reply::Control(ControlAction::SoftRestart));
}

#[test]
fn handshake_failures() {
    let wrong = WireSession::spawn_shell("read -r h; echo hi", 0, SECOND);
    assert!(matches!(wrong, Err(BridgeError::HandshakeFailed(_))));
    let gone = WireSession::spawn_shell("exit 0", 0, SECOND);
    assert!(matches!(gone, Err(BridgeError::HandshakeFailed(_))));
    let mut cmd = Command::new("/no/such/program");
    cmd.arg("x");
    assert!(matches!(WireSession::spawn(cmd, SECOND), Err(BridgeError::Spawn(_))));
}

#[test]
fn silent_children_time_out_and_are_reaped() {
    let mut w = WireSession::spawn_shell("read -r h; echo '###READY###'; exec sleep 30", 0, Duration::from_millis(150)).unwrap();
    let pid = w.pid();
    w.send_observation("hello").unwrap();
    assert!(matches!(w.receive_command(), Err(BridgeError::Timeout(_))));
    drop(w);
    assert!(!alive(pid), "child {pid} left behind");
}

#[test]
fn dead_children_are_reported() {
    let mut w = spawn("read -r h; echo '###READY###'; read -r x; exit 0");
    std::thread::sleep(Duration::from_millis(50));
    let r = w.send_observation("one").and_then(|_| w.receive_command());
    assert!(matches!(r, Err(BridgeError::ChildDead)), "{r:?}");
}

#[test]
fn no_children_outlive_their_sessions() {
    let mut pids = Vec::new();
    for _ in 0..5 {
        let mut w = spawn(&child("echo look"));
        ask(&mut w, "x");
        pids.push(w.pid());
    }
    assert!(pids.iter().all(|p| !alive(*p)));
}

#[test]
fn external_agent_maps_failures_and_restarts_on_reset() {
    let mut a = ExternalAgent::new("pid", &child("echo $$"), 0, SECOND);
    let p1 = a.action("x");
    assert_eq!(a.action("x"), p1);
    a.reset();
    let p2 = a.action("x");
    assert_ne!(p1, p2);
    assert!(!alive(p1.parse().unwrap()));

    let mut slow = ExternalAgent::new("slow", "read -r h; echo '###READY###'; exec sleep 30", 0, Duration::from_millis(100));
    assert!(matches!(slow.try_action("x"), Err(AgentError::Timeout(100))));
    let mut broken = ExternalAgent::new("broken", "exit 1", 0, SECOND);
    assert!(matches!(broken.try_action("x"), Err(AgentError::Fault(_))));
    assert_eq!(broken.action("x"), "##QUIT##");
}

struct North;
impl Agent for North {
    fn name(&self) -> &str {
        "north"
    }
    fn action(&mut self, _: &str) -> String {
        "north".into()
    }
    fn reset(&mut self) {}
}

#[test]
fn external_transcript_equals_in_process_transcript() {
    let game = GameSource::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games/maze.json")).unwrap();
    let opts = EpisodeOptions { steps: 40, step_limit: SECOND, poll_score: true };
    let ext = run_episode(Box::new(ExternalAgent::new("n", &child("echo north"), 0, SECOND)), "n", &game, 0, 0, &opts);
    let inproc = run_episode(Box::new(North), "n", &game, 0, 0, &opts);
    assert_eq!(ext.transcript, inproc.transcript);
    assert_eq!(ext.record, inproc.record);
}
