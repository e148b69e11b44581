"""Adapter registry plus the bundled fake adapters.

An adapter handles one request kind (segment, match, or track/register)
by mapping a request payload dict to a response payload dict. Real model
wrappers (promptable segmenters, feature matchers, pose estimators) are
optional extras: the skeleton classes below show the integration points,
while the fakes answer deterministically with no model weights so the
protocol itself can be exercised end to end.
"""

from __future__ import annotations

import threading

import numpy as np

from .framing import image_to_payload

# Fixed 8x8 checkerboard mask returned by the fake segmenter; the test
# fixture file holds these exact 64 raw bytes.
CHECKERBOARD_8X8 = ((np.indices((8, 8)).sum(axis=0) % 2)
                    .astype(np.uint8))


class Adapter:
    """Base adapter: one handler per supported request kind.

    concurrent=False serializes calls to this adapter (the server takes a
    per-adapter lock), for wrapped models that are not thread-safe.
    """

    concurrent = True

    def __init__(self):
        self._lock = threading.Lock()

    def handle(self, kind: str, payload: dict) -> dict:
        fn = getattr(self, kind, None)
        if fn is None:
            raise KeyError(kind)
        if self.concurrent:
            return fn(payload)
        with self._lock:
            return fn(payload)


class FakeSegmenter(Adapter):
    """Always answers with the fixed 8x8 checkerboard mask."""

    def segment(self, payload: dict) -> dict:
        return {"mask": image_to_payload(CHECKERBOARD_8X8)}


class FakeMatcher(Adapter):
    """Returns four diagonal correspondences with descending scores."""

    def match(self, payload: dict) -> dict:
        return {"matches": [
            {"ref_point": [float(i), float(i)],
             "frame_point": [float(i) + 1.0, float(i) + 1.0],
             "score": 1.0 - 0.1 * i}
            for i in range(4)]}


class FakeEstimator(Adapter):
    """register -> identity pose 1 m ahead; track -> echo of prev_pose."""

    def register(self, payload: dict) -> dict:
        return {"R": np.eye(3).ravel().tolist(), "t": [0.0, 0.0, 1.0]}

    def track(self, payload: dict) -> dict:
        prev = payload["prev_pose"]
        return {"R": list(prev["R"]), "t": list(prev["t"])}


class Sam2SegmenterSkeleton(Adapter):
    """Wrapper outline for a promptable video segmenter.

    Load the checkpoint in __init__, then implement segment() to run
    point-prompted inference on the decoded image and return
    {"mask": image_to_payload(binary_mask)}. GPU inference is typically
    not thread-safe, so declare concurrent = False.
    """

    concurrent = False

    def segment(self, payload: dict) -> dict:
        raise NotImplementedError("bring your own segmenter weights")


class LightGlueMatcherSkeleton(Adapter):
    """Wrapper outline for a learned feature matcher.

    Implement match() to extract and match keypoints between the decoded
    reference and frame images, returning
    {"matches": [{"ref_point", "frame_point", "score"}, ...]} sorted by
    descending score.
    """

    concurrent = False

    def match(self, payload: dict) -> dict:
        raise NotImplementedError("bring your own matcher weights")


class FoundationPoseEstimatorSkeleton(Adapter):
    """Wrapper outline for a model-based pose estimator.

    Implement register() (global estimation from image + mask + model_id)
    and track() (refinement from prev_pose), each returning
    {"R": [9 floats, row-major], "t": [3 floats]}.
    """

    concurrent = False

    def register(self, payload: dict) -> dict:
        raise NotImplementedError("bring your own estimator weights")

    def track(self, payload: dict) -> dict:
        raise NotImplementedError("bring your own estimator weights")


def fake_adapters() -> dict[str, Adapter]:
    est = FakeEstimator()
    return {"segment": FakeSegmenter(), "match": FakeMatcher(),
            "register": est, "track": est}


# Named adapter sets selectable from the CLI; extend this registry to
# plug in real model wrappers.
ADAPTER_SETS = {"fake": fake_adapters}
