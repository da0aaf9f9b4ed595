//! Real-socket smoke test: two clients against a relay on a loopback port.

use std::net::TcpListener;
use std::thread;

use crdt_core::{converged, DocumentState};
use sync_relay::{FileStorage, RelayCore, SessionConfig, TcpClient};

#[test]
fn two_clients_sync_over_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let storage = FileStorage::open(dir.path(), "doc").unwrap();
    let relay = RelayCore::new("doc", storage);
    thread::spawn(move || sync_relay::serve_relay(listener, relay));

    let mut a = TcpClient::connect(addr, DocumentState::new(1), SessionConfig::new("doc")).unwrap();
    let mut b = TcpClient::connect(addr, DocumentState::new(2), SessionConfig::new("doc")).unwrap();

    a.core_mut()
        .handle_mut()
        .doc_mut()
        .text_insert(0, "over tcp")
        .unwrap();
    a.sync().unwrap(); // relay has it now
    b.sync().unwrap(); // pull

    assert_eq!(b.core().handle().doc().text_read(), "over tcp");

    b.core_mut().handle_mut().doc_mut().lww_set("k", "f", 3i64);
    b.sync().unwrap();
    a.sync().unwrap();
    assert_eq!(
        a.core().handle().doc().lww_get("k", "f"),
        Some(&crdt_core::ScalarValue::Int(3))
    );
    assert!(converged(a.core().handle().doc(), b.core().handle().doc()));

    // state survives a relay restart via the op log
    drop(a);
    drop(b);
    let storage = FileStorage::open(dir.path(), "doc").unwrap();
    let restarted = RelayCore::new("doc", storage);
    assert_eq!(restarted.doc().text_read(), "over tcp");
}

#[test]
fn wrong_doc_id_fails_the_handshake() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let relay = RelayCore::new("doc", sync_relay::MemStorage::default());
    thread::spawn(move || sync_relay::serve_relay(listener, relay));

    let mut cfg = SessionConfig::new("some-other-doc");
    cfg.sync_timeout = simnet::VirtualTime::from_millis(500);
    cfg.max_attempts = 0;
    let res = TcpClient::connect(addr, DocumentState::new(1), cfg);
    assert!(res.is_err());
}
