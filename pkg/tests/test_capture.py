import pytest

from companion.capture import (
    BufferOverflow,
    CaptureBuffer,
    ClockRegression,
    build_real_time_context,
    infer_location_activity,
)
from companion.providers import UnknownFrame, reference_bundle


@pytest.fixture(scope="module")
def bundle():
    return reference_bundle()


class TestInference:
    def test_office_example(self, bundle):
        assert infer_location_activity(bundle, "a desk with a laptop", "I am so busy") \
            == ("office", "working")

    def test_empty_inputs_fall_back(self, bundle):
        assert infer_location_activity(bundle, "", "") == ("unknown", "unknown")

    def test_beakers_rule(self, bundle):
        loc, act = infer_location_activity(
            bundle, "A table filled with beakers and test tubes.", "")
        assert (loc, act) == ("laboratory", "doing experiments")

    def test_malformed_reply_degrades(self, bundle):
        broken = reference_bundle()
        object.__setattr__(broken, "completer_base", lambda tag, inputs, seed: "gibberish")
        assert infer_location_activity(broken, "x", "y") == ("unknown", "unknown")


class TestBuildContext:
    def test_desk_tick(self, bundle):
        buf = CaptureBuffer("u1")
        ctx = build_real_time_context(bundle, buf, 1000.0, frame="desk01",
                                      transcript="I am so busy")
        assert ctx.caption == "a desk with a laptop"
        assert ctx.utterance == "I am so busy"
        assert (ctx.location, ctx.activity) == ("office", "working")
        assert ctx.tick == 0

    def test_caption_only_tick(self, bundle):
        buf = CaptureBuffer("u1")
        ctx = build_real_time_context(bundle, buf, 1000.0, frame="desk01", transcript="")
        assert ctx.utterance == ""
        assert ctx.location == "office"

    def test_audio_fixture(self, bundle):
        buf = CaptureBuffer("u1")
        ctx = build_real_time_context(bundle, buf, 1000.0, frame="desk01", audio="u_busy")
        assert ctx.utterance == "I am so busy"

    def test_unknown_frame_propagates(self, bundle):
        buf = CaptureBuffer("u1")
        with pytest.raises(UnknownFrame):
            build_real_time_context(bundle, buf, 1000.0, frame="missing")

    def test_clock_regression(self, bundle):
        buf = CaptureBuffer("u1")
        build_real_time_context(bundle, buf, 1000.0, caption="a desk", transcript="")
        with pytest.raises(ClockRegression):
            build_real_time_context(bundle, buf, 999.0, caption="a desk", transcript="")

    def test_ticks_dense_and_ordered(self, bundle):
        buf = CaptureBuffer("u1")
        for i in range(5):
            ctx = build_real_time_context(bundle, buf, 1000.0 + i * 10,
                                          caption="a desk", transcript="")
            assert ctx.tick == i

    def test_buffer_overflow(self, bundle):
        buf = CaptureBuffer("u1", cap=2)
        build_real_time_context(bundle, buf, 1.0, caption="a desk", transcript="")
        build_real_time_context(bundle, buf, 2.0, caption="a desk", transcript="")
        with pytest.raises(BufferOverflow):
            build_real_time_context(bundle, buf, 3.0, caption="a desk", transcript="")

    def test_stale_caption_flagged(self, bundle):
        buf = CaptureBuffer("u1")
        ctx = build_real_time_context(bundle, buf, 1000.0, caption="a desk",
                                      transcript="hi", caption_age_s=25.0)
        assert ctx.stale_caption

    def test_day_buckets(self, bundle):
        buf = CaptureBuffer("u1")
        build_real_time_context(bundle, buf, 0.0, caption="a desk", transcript="")
        build_real_time_context(bundle, buf, 86400.0 + 5, caption="a desk", transcript="")
        assert buf.days() == ["1970-01-01", "1970-01-02"]
        assert len(buf.day_contexts("1970-01-01")) == 1
