from hetsim.signaling import (
    MESSAGES_PER_POLL,
    MESSAGES_PER_TRANSFER,
    MessageLog,
    X2Kind,
    expected_message_count,
)


def test_kind_value_strings():
    assert X2Kind.RESOURCE_STATUS_REQUEST.value == "ResourceStatusRequest"
    assert X2Kind.RESOURCE_STATUS_RESPONSE.value == "ResourceStatusResponse"
    assert X2Kind.LOAD_INFORMATION.value == "LoadInformation"
    assert X2Kind.METASIGNALLING_REQUEST.value == "MetasignallingInformationRequest"
    assert X2Kind.METASIGNALLING_ACK.value == "MetasignallingInformationAcknowledge"


def test_message_log_sequencing():
    log = MessageLog()
    log.emit(X2Kind.RESOURCE_STATUS_REQUEST, 1, 2)
    log.emit(X2Kind.RESOURCE_STATUS_RESPONSE, 2, 1)
    assert len(log) == 2
    rows = log.rows()
    assert rows[0] == (1, "ResourceStatusRequest", 1, 2)
    assert rows[1] == (2, "ResourceStatusResponse", 2, 1)
    counts = log.count_by_kind()
    assert counts[X2Kind.RESOURCE_STATUS_REQUEST] == 1


def test_expected_message_count_formula():
    assert MESSAGES_PER_POLL == 3
    assert MESSAGES_PER_TRANSFER == 2
    # 3(N-1)n_R + 3n'_R + 2n_s
    assert expected_message_count(6, 2, 1, 2) == 3 * 5 * 2 + 3 * 1 + 2 * 2
    assert expected_message_count(2, 1, 0, 1) == 5
    assert expected_message_count(6, 0, 0, 0) == 0
