from tracksentry_bridge.framing import read_frame, write_frame


def hello(stream, version=1, rid=1):
    write_frame(stream, {"id": rid, "kind": "hello",
                         "payload": {"protocol_version": version}})
    return read_frame(stream)
