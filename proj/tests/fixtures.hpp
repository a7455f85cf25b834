#pragma once

// Small SQuAD-style document: two paragraphs, four questions, one of them
// unanswerable.
inline constexpr const char* kSquadFixture = R"({"version": "1.1", "data": [{"title": "t", "paragraphs": [
    {"context": "The battle of Plassey happened on 23 June 1757.", "qas": [
      {"id": "1", "question": "When did the battle happen?", "answers": [{"text": "23 June 1757", "answer_start": 34}, {"text": "1757", "answer_start": 42}]},
      {"id": "2", "question": "Where?", "answers": []}]},
    {"context": "Second paragraph.", "qas": [
      {"id": "3", "question": "Which paragraph?", "answers": [{"text": "Second", "answer_start": 0}]},
      {"id": "4", "question": "What is it?", "answers": [{"text": "paragraph", "answer_start": 7}]}]}]}]})";
