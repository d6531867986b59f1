// Static copy for the three rating axes and their five levels, bundled so the
// UI needs no service round-trip for this text.

import type { AxisKey, Level } from "./types.js";

export interface LevelDescription {
  value: Level;
  name: string;
  text: string;
}

export interface AxisDescription {
  key: AxisKey;
  title: string;
  summary: string;
  levels: LevelDescription[];
}

export const AXES: AxisDescription[] = [
  {
    key: "relevance_detail",
    title: "Relevance & Detail",
    summary:
      "Evaluates how well the generated caption relates to the image and capture the essential details.",
    levels: [
      {
        value: 5,
        name: "Excellent",
        text: "The caption perfectly describes the main elements of the image with precise details.",
      },
      {
        value: 4,
        name: "Good",
        text: "The caption describes most of the main elements accurately but may miss minor details.",
      },
      {
        value: 3,
        name: "Average",
        text: "The caption captures the general idea but lacks some significant details.",
      },
      {
        value: 2,
        name: "Below Average",
        text: "The caption misses many important elements and may misrepresent the image.",
      },
      {
        value: 1,
        name: "Poor",
        text: "The caption is largely unrelated to the image or misses the main point entirely.",
      },
    ],
  },
  {
    key: "hallucination",
    title: "Hallucination",
    summary:
      "Assesses the extent to which the caption introduces elements or concepts not present in the image.",
    levels: [
      {
        value: 5,
        name: "Excellent",
        text: "No hallucinated details; the caption strictly adheres to the image content.",
      },
      {
        value: 4,
        name: "Good",
        text: "Minor hallucinated details that don't significantly alter the overall meaning.",
      },
      {
        value: 3,
        name: "Average",
        text: "Some noticeable hallucinations, but the core message remains intact.",
      },
      {
        value: 2,
        name: "Below Average",
        text: "Many hallucinated details that mislead the viewer.",
      },
      {
        value: 1,
        name: "Poor",
        text: "The caption is mostly based on hallucinated content, with little to no relation to the actual image.",
      },
    ],
  },
  {
    key: "fluency",
    title: "Fluency & Conciseness",
    summary: "Evaluates the linguistic quality of the caption and its brevity.",
    levels: [
      {
        value: 5,
        name: "Excellent",
        text: "The caption is linguistically flawless and conveys the message in the most concise manner.",
      },
      {
        value: 4,
        name: "Good",
        text: "The caption is mostly fluent with minor verbosity but remains clear.",
      },
      {
        value: 3,
        name: "Average",
        text: "Some linguistic errors or unnecessary words, but the message is understandable.",
      },
      {
        value: 2,
        name: "Below Average",
        text: "Several linguistic issues such as obvious misspellings or grammatical errors and a lack of conciseness, make it harder to grasp.",
      },
      {
        value: 1,
        name: "Poor",
        text: "The caption is hard to understand due to major linguistic errors and excessive wordiness, such as duplication and broken sentences.",
      },
    ],
  },
];
