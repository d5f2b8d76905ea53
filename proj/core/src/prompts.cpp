// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/prompts.hpp"

namespace resonance::prompts {

const std::string_view kMultiwayInstruction =
    "Analyze the music by considering both its auditory and visual components. Describe the music in"
    " detail, incorporating its tempo, chords, downbeats, and key, while also reflecting on how"
    " these musical features align with the video or a key image from the video.";

const std::string_view kUnifyInstruction =
    "Given the above information of video captions, image captions, music captions, and music"
    " features, generate a unified description that combines the elements of both the video and the"
    " music, taking into account the mood, style, and emotions conveyed by the captions and music"
    " features. The description should be cohesive and provide a holistic view of the content,"
    " reflecting how the visual and auditory components complement each other. Focus on creating a"
    " narrative that integrates the rhythm, harmony, and tonality of the music with the visual"
    " elements and storyline of the video.";

const std::string_view kAny2TPreamble =
    "Generate the output for the following input; the style of the input, instruction, and output"
    " may vary.";

const std::string_view kAny2TSystem =
    "Help generate input, instruction, and output triplets using the given paired music caption,"
    " video caption, image caption, music features, and unified caption. The unified caption"
    " includes all three captions as well as music features such as tempo, chords, downbeats, and"
    " key.\n"
    "\n"
    "Guidelines:\n"
    "1. Input: Should be a sentence that includes two or all three modalities: music (mandatory),"
    " video, and/or image. Music must be referred to as <Music>. Image must be referred to as"
    " <Image>. Video must be referred to as <Video>.\n"
    "2. Instruction: Should be a text-based question or directive that requires generating a unified"
    " output based on the given inputs. It should guide the model to consider both the audio and the"
    " visual aspects, explaining how they interact to create a unified experience.\n"
    "3. Output: Should be a textual response, potentially composed using the information from the"
    " music, video, image captions or the unified caption.\n"
    "\n"
    "Example:\n"
    "Input: Consider the music of <Music> and its paired image of <Image> that visually represents a"
    " key moment of the music.\n"
    "Instruction: Provide a description of how the music's rhythm, tempo, and tonal qualities are"
    " visually represented in the image, combining insights from both the music and the image"
    " captions.\n"
    "Output: The music is characterized by a slow tempo with a calm, serene melody, primarily"
    " featuring piano and soft strings. The image complements this mood, showing a peaceful sunset"
    " over a calm ocean. The soft, gentle waves in the image mirror the steady downbeats of the"
    " music, while the warm color palette in the image reflects the key of the music, which is in A"
    " major, creating a sense of tranquility. Together, they evoke a feeling of peace and reflection.";

}  // namespace resonance::prompts
