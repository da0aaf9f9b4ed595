//! Core protocol tests driving the relay and client state machines directly,
//! with a hand-rolled frame shuttle instead of a transport.

use std::collections::HashMap;

use crdt_core::{converged, DocumentState};
use sync_relay::{
    FileStorage, Frame, FrameType, MemStorage, RelayAction, RelayCore, RelayStorage, SessionCmd,
    SessionConfig, SessionCore, SessionState,
};

/// Shuttles frames between the relay and clients until quiescent.
fn drive(
    relay: &mut RelayCore<impl RelayStorage>,
    clients: &mut HashMap<u64, SessionCore>,
    mut to_relay: Vec<(u64, Vec<u8>)>,
) {
    while let Some((session, bytes)) = to_relay.pop() {
        for action in relay.on_frame(session, &bytes) {
            if let RelayAction::Send { session, bytes } = action {
                let client = clients.get_mut(&session).expect("unknown session");
                for cmd in client.on_frame(&bytes).cmds {
                    if let SessionCmd::SendFrame(frame) = cmd {
                        to_relay.push((session, frame));
                    }
                }
            }
        }
    }
}

fn connect(
    relay: &mut RelayCore<impl RelayStorage>,
    clients: &mut HashMap<u64, SessionCore>,
    session: u64,
    replica: u64,
) {
    let mut core = SessionCore::new(DocumentState::new(replica), SessionConfig::new("doc"));
    core.start();
    let hello = core
        .connected()
        .cmds
        .into_iter()
        .find_map(|c| match c {
            SessionCmd::SendFrame(b) => Some(b),
            _ => None,
        })
        .unwrap();
    clients.insert(session, core);
    drive(relay, clients, vec![(session, hello)]);
    assert_eq!(clients[&session].state(), SessionState::Live);
}

#[test]
fn handshake_transfers_existing_state_both_ways() {
    let mut relay = RelayCore::new("doc", MemStorage::default());
    let mut clients = HashMap::new();

    // seed the relay with one client's pre-existing text
    let mut seeder = SessionCore::new(DocumentState::new(9), SessionConfig::new("doc"));
    seeder
        .handle_mut()
        .doc_mut()
        .text_insert(0, "shared")
        .unwrap();
    seeder.start();
    let hello = seeder
        .connected()
        .cmds
        .into_iter()
        .find_map(|c| match c {
            SessionCmd::SendFrame(b) => Some(b),
            _ => None,
        })
        .unwrap();
    clients.insert(9, seeder);
    drive(&mut relay, &mut clients, vec![(9, hello)]);
    assert_eq!(relay.doc().text_read(), "shared");

    // a fresh client catches up during its handshake
    connect(&mut relay, &mut clients, 2, 2);
    assert_eq!(clients[&2].handle().doc().text_read(), "shared");
    assert!(converged(clients[&2].handle().doc(), relay.doc()));
}

#[test]
fn update_fans_out_to_exactly_the_other_sessions() {
    let mut relay = RelayCore::new("doc", MemStorage::default());
    let mut clients = HashMap::new();
    connect(&mut relay, &mut clients, 1, 1);
    connect(&mut relay, &mut clients, 2, 2);
    connect(&mut relay, &mut clients, 3, 3);

    let sender = clients.get_mut(&1).unwrap();
    sender.handle_mut().doc_mut().text_insert(0, "hi").unwrap();
    let update = sender
        .flush_outbox()
        .cmds
        .into_iter()
        .find_map(|c| match c {
            SessionCmd::SendFrame(b) => Some(b),
            _ => None,
        })
        .unwrap();

    let actions = relay.on_frame(1, &update);
    let targets: Vec<u64> = actions
        .iter()
        .map(|a| match a {
            RelayAction::Send { session, .. } => *session,
            RelayAction::Close { session } => panic!("unexpected close of {session}"),
        })
        .collect();
    assert_eq!(targets, vec![2, 3]);

    // re-sending the same packet applies nothing and fans out nothing
    assert!(relay.on_frame(1, &update).is_empty());
}

#[test]
fn malformed_frame_closes_only_the_offender() {
    let mut relay = RelayCore::new("doc", MemStorage::default());
    let mut clients = HashMap::new();
    connect(&mut relay, &mut clients, 1, 1);
    connect(&mut relay, &mut clients, 2, 2);
    assert_eq!(relay.session_count(), 2);

    let garbage = vec![0xFF, 0xFF, 0xFF];
    let actions = relay.on_frame(1, &garbage);
    assert_eq!(actions, vec![RelayAction::Close { session: 1 }]);
    assert_eq!(relay.session_count(), 1);

    // the surviving session still gets answers
    let sync_req = Frame::new(
        FrameType::SyncReq,
        sync_relay::frame::encode_vector(&crdt_core::StateVector::new()),
    )
    .to_bytes();
    let actions = relay.on_frame(2, &sync_req);
    assert!(matches!(
        actions.as_slice(),
        [RelayAction::Send { session: 2, .. }]
    ));
}

#[test]
fn reconnecting_replica_evicts_its_stale_session() {
    let mut relay = RelayCore::new("doc", MemStorage::default());
    let mut clients = HashMap::new();
    connect(&mut relay, &mut clients, 1, 7);
    // same replica reappears on a new session (old one went silent)
    connect(&mut relay, &mut clients, 8, 7);
    assert_eq!(relay.session_count(), 1);
}

#[test]
fn persisted_ops_survive_relay_restart() {
    let dir = tempfile::tempdir().unwrap();
    {
        let storage = FileStorage::open(dir.path(), "doc").unwrap();
        let mut relay = RelayCore::new("doc", storage);
        let mut clients = HashMap::new();
        connect(&mut relay, &mut clients, 1, 1);
        let c = clients.get_mut(&1).unwrap();
        c.handle_mut().doc_mut().text_insert(0, "abc").unwrap();
        c.handle_mut().doc_mut().lww_set("k", "f", 5i64);
        c.handle_mut().doc_mut().log_append("entry");
        let update = c
            .flush_outbox()
            .cmds
            .into_iter()
            .find_map(|cmd| match cmd {
                SessionCmd::SendFrame(b) => Some(b),
                _ => None,
            })
            .unwrap();
        relay.on_frame(1, &update);
        assert_eq!(relay.doc().text_read(), "abc");
    }

    let storage = FileStorage::open(dir.path(), "doc").unwrap();
    let relay = RelayCore::new("doc", storage);
    assert_eq!(relay.doc().text_read(), "abc");
    assert_eq!(relay.doc().log_read(), vec!["entry"]);
    assert_eq!(
        relay.doc().lww_get("k", "f"),
        Some(&crdt_core::ScalarValue::Int(5))
    );
}

#[test]
fn torn_tail_is_truncated_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    {
        let storage = FileStorage::open(dir.path(), "doc").unwrap();
        let mut relay = RelayCore::new("doc", storage);
        let mut clients = HashMap::new();
        connect(&mut relay, &mut clients, 1, 1);
        let c = clients.get_mut(&1).unwrap();
        c.handle_mut().doc_mut().text_insert(0, "ok").unwrap();
        let update = c
            .flush_outbox()
            .cmds
            .into_iter()
            .find_map(|cmd| match cmd {
                SessionCmd::SendFrame(b) => Some(b),
                _ => None,
            })
            .unwrap();
        relay.on_frame(1, &update);
    }

    // simulate a crash mid-append: a frame header promising more than exists
    let path = dir.path().join("doc.oplog");
    let intact = std::fs::metadata(&path).unwrap().len();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.extend_from_slice(&100u32.to_le_bytes());
    bytes.push(4);
    std::fs::write(&path, &bytes).unwrap();

    let storage = FileStorage::open(dir.path(), "doc").unwrap();
    let relay = RelayCore::new("doc", storage);
    assert_eq!(relay.doc().text_read(), "ok");
    assert_eq!(std::fs::metadata(&path).unwrap().len(), intact);
}

#[test]
fn hello_for_wrong_document_is_rejected() {
    let mut relay = RelayCore::new("doc", MemStorage::default());
    let hello = Frame::new(
        FrameType::Hello,
        sync_relay::frame::encode_hello(crdt_core::ReplicaId(1), "other-doc"),
    )
    .to_bytes();
    let actions = relay.on_frame(1, &hello);
    assert_eq!(actions, vec![RelayAction::Close { session: 1 }]);
}
