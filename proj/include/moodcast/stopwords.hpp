#pragma once

#include <array>
#include <string_view>

namespace moodcast {

// English stop-word list, version 1. Entries are already in the normalized
// form produced by preprocess() (lowercase, apostrophes removed). Changing
// this list changes every downstream sentiment series; bump the version.
inline constexpr int kStopwordListVersion = 1;

inline constexpr std::array<std::string_view, 163> kEnglishStopwords{
    "a",          "about",    "above",   "after",    "again",   "against", "aint",    "all",
    "am",         "an",       "and",     "any",      "are",     "arent",   "as",      "at",
    "be",         "because",  "been",    "before",   "being",   "below",   "between", "both",
    "but",        "by",       "can",     "cant",     "could",   "couldnt", "d",       "did",
    "didnt",      "do",       "does",    "doesnt",   "doing",   "dont",    "down",    "during",
    "each",       "few",      "for",     "from",     "further", "had",     "hadnt",   "has",
    "hasnt",      "have",     "havent",  "having",   "he",      "her",     "here",    "hers",
    "herself",    "him",      "himself", "his",      "how",     "i",       "if",      "in",
    "into",       "is",       "isnt",    "it",       "its",     "itself",  "just",    "ll",
    "m",          "ma",       "me",      "more",     "most",    "mustnt",  "my",      "myself",
    "neednt",     "no",       "nor",     "not",      "now",     "o",       "of",      "off",
    "on",         "once",     "only",    "or",       "other",   "our",     "ours",    "ourselves",
    "out",        "over",     "own",     "re",       "rt",      "s",       "same",    "shant",
    "she",        "shes",     "should",  "shouldnt", "so",      "some",    "such",    "t",
    "than",       "that",     "thats",   "the",      "their",   "theirs",  "them",    "themselves",
    "then",       "there",    "these",   "they",     "this",    "those",   "through", "to",
    "too",        "under",    "until",   "up",       "ve",      "very",    "via",     "was",
    "wasnt",      "we",       "were",    "werent",   "what",    "when",    "where",   "which",
    "while",      "who",      "whom",    "why",      "will",    "with",    "wont",    "would",
    "wouldnt",    "y",        "you",     "youd",     "youll",   "your",    "youre",   "yours",
    "yourself",   "yourselves", "youve"};

}  // namespace moodcast
